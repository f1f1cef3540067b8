#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "nldiss/evolve.hpp"
#include "nldiss/fock.hpp"
#include "nldiss/liouvillian.hpp"
#include "nldiss/nonlinear_function.hpp"

namespace nldiss {

// Scenario configuration, read from INI text. The schema is documented in
// docs/config.md; every section and key not listed there is rejected.

struct StateSpec {
    enum class Kind { Vacuum, Fock, Coherent, Thermal };
    Kind kind = Kind::Vacuum;
    int n = 0;
    complex alpha{0.0, 0.0};
    double nbar = 0.0;

    /// "vacuum", "fock:N", "coherent:RE" or "coherent:RE,IM", "thermal:NBAR".
    static StateSpec parse(const std::string& text, const std::string& field);
    std::string to_string() const;
};

struct GadgetSpec {
    enum class Kind { Ncl, Projector };
    Kind kind = Kind::Ncl;

    // ncl
    std::string f_name = "x-1";  // preset name, "poly" or "table"
    int f_power = 1;
    double f_shift = 0.0;
    std::vector<double> f_coefficients;
    std::vector<double> f_table;

    // projector
    StateSpec target;
    StateSpec source;
    bool source_is_initial = false;
    int k = 2;

    NonlinearFunction function() const;
};

struct SolverSpec {
    enum class Mode { Propagate, Steady, Recurrence };
    enum class Method { Auto, Nullspace, Evolve, Approximate, CompareApproximate };
    enum class Recurrence { Auto, Ncl, Thermal };

    Mode mode = Mode::Propagate;
    Method method = Method::Auto;

    // propagate
    double t_end = 1.0;
    int t_points = 101;
    bool log_spacing = false;
    double t_first = 1e-3;  // first nonzero time of a log grid
    bool include_zero = true;
    bool unit_nonlinear = false;  // grid in units of 1/gamma instead of 1/Gamma
    double tol = 1e-9;
    Integrator integrator = Integrator::LawsonDopri5;
    double fixed_step = 0.0;
    double top_population_limit = 1e-6;

    // steady
    double t_max = 1e4;
    double steady_tol = 1e-10;
    int nullspace_max_dim = 64;
    bool with_recurrence = false;

    // recurrence
    Recurrence recurrence = Recurrence::Auto;
    int recurrence_start = -1;  // -1: first index above every zero of f^2 + eps
};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
    /// Optional outer parameter; the run covers every (series, value) pair.
    std::string series_parameter;
    std::vector<double> series_values;
};

struct OutputSpec {
    std::string name = "scenario";
    enum class DistributionAt { None, Final, MaxFidelity, MinQ };
    DistributionAt distribution_at = DistributionAt::Final;
    bool poisson_reference = false;
    /// Sweep values whose distributions are reported (steady runs); empty = all.
    std::vector<double> distribution_values;
};

struct ScenarioConfig {
    int dim = 0;
    double gamma_linear = 0.0;
    double gamma_nonlinear = 0.0;
    double nbar = 0.0;
    double omega = 0.0;
    bool truncation_guard = true;

    GadgetSpec gadget;
    StateSpec initial;
    SolverSpec solver;
    std::optional<SweepSpec> sweep;
    OutputSpec output;

    /// Normalized INI text of the effective configuration.
    std::string echo() const;

    /// alpha0 = Omega / gamma and epsilon = Gamma / gamma.
    double alpha0() const;
    double epsilon() const;
};

/// Parses INI text. `overrides` are "section.key=value" strings applied on
/// top of the file. Throws ConfigError naming the offending field.
ScenarioConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides = {});
ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Copy of `config` with one sweep parameter set. Recognized names: alpha,
/// alpha0, epsilon, nbar, omega, gamma_linear, gamma_nonlinear, k, dim.
ScenarioConfig with_parameter(const ScenarioConfig& config, const std::string& parameter, double value);

/// Builders used by the scenario runner and by `validate`.
MasterEquation build_master_equation(const ScenarioConfig& config);
DensityMatrix build_initial_state(const ScenarioConfig& config);
/// Target state of a projector gadget; nullopt for NCL.
std::optional<StateVector> build_target(const ScenarioConfig& config);
/// Physical time grid (grid values divided by the unit rate).
std::vector<double> build_time_grid(const ScenarioConfig& config);
/// Rate that converts physical time to the reported axis (Gamma or gamma).
double time_unit_rate(const ScenarioConfig& config);

}  // namespace nldiss
