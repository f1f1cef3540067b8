#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nldiss/config.hpp"
#include "nldiss/distribution.hpp"
#include "nldiss/version.hpp"

namespace nldiss {

struct TimeSample {
    double time = 0.0;  // in units of the configured rate (Gamma t or gamma t)
    double mean_n = 0.0;
    double variance_n = 0.0;
    double mandel_q = 0.0;  // NaN for the vacuum
    double fidelity = 0.0;  // NaN without a projector target
    double purity = 0.0;
    double trace_error = 0.0;
};

struct SteadyReport {
    double mean_n = 0.0;
    double variance_n = 0.0;
    double mandel_q = 0.0;
    double purity = 0.0;  // NaN when only the diagonal is known
    double fidelity = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    double residual = std::numeric_limits<double>::quiet_NaN();
    std::string method;
};

struct DistributionRecord {
    /// "state", "exact", "approximate", "recurrence" or "poisson".
    std::string label;
    /// Time of the snapshot; NaN for steady states.
    double time = std::numeric_limits<double>::quiet_NaN();
    DiagonalDistribution distribution;
};

/// Health of the propagations of one point.
struct RunDiagnostics {
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
    double max_top_population = 0.0;
    double max_step_trace_correction = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
    long rhs_evaluations = 0;
};

struct PointResult {
    double sweep_value = std::numeric_limits<double>::quiet_NaN();
    double series_value = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    /// 1 for configuration errors, 2 for numerical failures, 0 when ok.
    int error_class = 0;
    std::string error;

    std::vector<TimeSample> series;
    std::optional<SteadyReport> steady;
    std::optional<SteadyReport> approximate;
    std::optional<SteadyReport> recurrence;
    std::vector<DistributionRecord> distributions;
    RunDiagnostics diagnostics;
    double seconds = 0.0;
};

struct Provenance {
    std::string version = version_string;
    std::string preset;  // empty for config files
    std::string config_echo;
    std::vector<std::pair<std::string, std::string>> tolerances;
    /// Files written for this result, filled in by the writers.
    std::vector<std::string> files;
};

struct ScenarioResult {
    std::string name;
    SolverSpec::Mode mode = SolverSpec::Mode::Propagate;
    std::string sweep_parameter;   // empty without a sweep
    std::string series_parameter;  // empty without a series
    /// Propagation runs: the time axis unit ("Gamma" or "gamma") and spacing.
    std::string time_unit = "Gamma";
    bool log_time = false;
    std::vector<PointResult> points;
    Provenance provenance;

    bool all_ok() const;
    /// True when every steady report that exists converged.
    bool all_converged() const;
};

struct RunOptions {
    /// Worker threads; 0 reads NLDISS_WORKERS and falls back to the hardware.
    int workers = 0;
    /// Called once per finished point, possibly from a worker thread, under a lock.
    std::function<void(std::size_t index, const PointResult&)> progress;
};

/// Worker count from NLDISS_WORKERS, else std::thread::hardware_concurrency().
int default_workers();

/// Runs one configuration without looking at its sweep block.
PointResult run_point(const ScenarioConfig& config);

/// Runs every sweep point (series-major, then sweep order). Points are
/// independent; errors are recorded per point and the run continues.
ScenarioResult run_sweep(const ScenarioConfig& config, const RunOptions& options = {});

/// Builds every point's master equation and initial state, so that parse and
/// truncation-guard errors surface without solving. Returns warnings.
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

const std::vector<std::string>& preset_names();
/// INI text of a preset; throws ConfigError for an unknown name.
const std::string& preset_text(const std::string& name);
ScenarioConfig preset_config(const std::string& name, const std::vector<std::string>& overrides = {});
ScenarioResult run_preset(const std::string& name, const std::vector<std::string>& overrides = {},
                          const RunOptions& options = {});

}  // namespace nldiss
