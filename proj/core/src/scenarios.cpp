#include "nldiss/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include "nldiss/errors.hpp"
#include "nldiss/evolve.hpp"
#include "nldiss/gadgets.hpp"
#include "nldiss/observables.hpp"
#include "nldiss/steady.hpp"

namespace nldiss {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

NullspaceOptions nullspace_options(const ScenarioConfig& c)
{
    NullspaceOptions o;
    o.max_dim = c.solver.nullspace_max_dim;
    return o;
}

PropagateOptions propagate_options(const ScenarioConfig& c)
{
    PropagateOptions o;
    o.tol = c.solver.tol;
    o.method = c.solver.integrator;
    o.fixed_step = c.solver.fixed_step;
    o.truncation_guard = c.truncation_guard;
    o.top_population_limit = c.solver.top_population_limit;
    return o;
}

SteadyOptions steady_options(const ScenarioConfig& c)
{
    SteadyOptions o;
    o.tol = c.solver.steady_tol;
    o.t_max = c.solver.t_max;
    o.propagate = propagate_options(c);
    o.propagate.keep_states = false;
    return o;
}

void absorb(RunDiagnostics& d, const Trajectory& t)
{
    d.max_trace_error = std::max(d.max_trace_error, t.max_trace_error);
    d.max_top_population = std::max(d.max_top_population, t.max_top_population);
    d.max_step_trace_correction = std::max(d.max_step_trace_correction, t.max_step_trace_correction);
    for (const auto& s : t.diagnostics) {
        d.max_hermiticity_error = std::max(d.max_hermiticity_error, s.hermiticity_error);
        d.min_eigenvalue = std::min(d.min_eigenvalue, s.min_eigenvalue);
    }
    d.accepted_steps += t.accepted_steps;
    d.rejected_steps += t.rejected_steps;
    d.rhs_evaluations += t.rhs_evaluations;
}

SteadyReport report_state(const DensityMatrix& rho, const std::optional<StateVector>& target, bool converged,
                          double residual, std::string method)
{
    const ObservableReport r = observe(rho, target ? &*target : nullptr);
    SteadyReport s;
    s.mean_n = r.mean_n;
    s.variance_n = r.variance_n;
    s.mandel_q = r.mandel_q;
    s.purity = r.purity;
    s.fidelity = r.fidelity.value_or(nan);
    s.converged = converged;
    s.residual = residual;
    s.method = std::move(method);
    return s;
}

SteadyReport report_distribution(const DiagonalDistribution& p, std::string method)
{
    SteadyReport s;
    s.mean_n = p.mean();
    s.variance_n = p.variance();
    s.mandel_q = p.mean() > 1e-14 ? p.mandel_q() : nan;
    s.purity = nan;
    s.converged = true;
    s.method = std::move(method);
    return s;
}

bool wants_distribution(const ScenarioConfig& c, double sweep_value)
{
    if (c.output.distribution_at == OutputSpec::DistributionAt::None)
        return false;
    const auto& list = c.output.distribution_values;
    if (list.empty() || std::isnan(sweep_value))
        return true;
    return std::any_of(list.begin(), list.end(), [&](double v) {
        return std::abs(v - sweep_value) <= 1e-9 * std::max(1.0, std::abs(v));
    });
}

DiagonalDistribution recurrence_for(const ScenarioConfig& c, std::string& method)
{
    const NonlinearFunction f = c.gadget.function();
    auto kind = c.solver.recurrence;
    if (kind == SolverSpec::Recurrence::Auto)
        kind = c.omega > 0.0 ? SolverSpec::Recurrence::Ncl : SolverSpec::Recurrence::Thermal;
    if (kind == SolverSpec::Recurrence::Ncl) {
        if (c.nbar != 0.0)
            throw ConfigError("solver.recurrence: the ncl recurrence needs nbar = 0");
        if (c.gamma_nonlinear <= 0.0)
            throw ConfigError("solver.recurrence: the ncl recurrence needs gamma_nonlinear > 0");
        const double eps = c.epsilon();
        const int start = c.solver.recurrence_start >= 0 ? c.solver.recurrence_start
                                                          : ncl_blocking_index(f, eps, c.dim);
        method = "recurrence:ncl";
        return ncl_recurrence(f, c.alpha0(), eps, c.dim, start);
    }
    if (c.omega != 0.0)
        throw ConfigError("solver.recurrence: the thermal recurrence needs omega = 0");
    if (c.gamma_linear <= 0.0)
        throw ConfigError("solver.recurrence: the thermal recurrence needs gamma_linear > 0");
    method = "recurrence:thermal";
    return thermal_recurrence(f, c.nbar, c.gamma_nonlinear / c.gamma_linear, c.dim);
}

void run_propagate(const ScenarioConfig& c, PointResult& out)
{
    const MasterEquation me = build_master_equation(c);
    const DensityMatrix rho0 = build_initial_state(c);
    const std::optional<StateVector> target = build_target(c);
    const std::vector<double> grid = build_time_grid(c);
    const double unit = time_unit_rate(c);

    const auto at = c.output.distribution_at;
    std::optional<DistributionRecord> picked;
    double best = nan;

    PropagateOptions opts = propagate_options(c);
    opts.keep_states = false;
    opts.observer = [&](double t, const DensityMatrix& rho) {
        ObservableReport r = observe(rho, target ? &*target : nullptr);
        TimeSample s;
        s.time = t * unit;
        s.mean_n = r.mean_n;
        s.variance_n = r.variance_n;
        s.mandel_q = r.mandel_q;
        s.fidelity = r.fidelity.value_or(nan);
        s.purity = r.purity;
        s.trace_error = std::abs(rho.matrix().trace().real() - 1.0);
        out.series.push_back(s);

        bool take = false;
        if (at == OutputSpec::DistributionAt::Final) {
            take = true;
        } else if (at == OutputSpec::DistributionAt::MaxFidelity) {
            take = std::isnan(best) || s.fidelity > best;
            if (take)
                best = s.fidelity;
        } else if (at == OutputSpec::DistributionAt::MinQ && !std::isnan(s.mandel_q)) {
            take = std::isnan(best) || s.mandel_q < best;
            if (take)
                best = s.mandel_q;
        }
        if (take)
            picked.emplace(DistributionRecord{"state", s.time, std::move(r.distribution)});
    };
    const Trajectory traj = propagate(me, rho0, grid, opts);
    absorb(out.diagnostics, traj);

    if (picked && wants_distribution(c, out.sweep_value)) {
        const double mean = picked->distribution.mean();
        const double time = picked->time;
        out.distributions.push_back(std::move(*picked));
        if (c.output.poisson_reference)
            out.distributions.push_back({"poisson", time, DiagonalDistribution::poisson(mean, c.dim)});
    }
}

SteadyResult solve_exact(const ScenarioConfig& c, const MasterEquation& me)
{
    auto method = c.solver.method;
    if (method == SolverSpec::Method::Auto || method == SolverSpec::Method::CompareApproximate)
        method = c.dim <= c.solver.nullspace_max_dim ? SolverSpec::Method::Nullspace : SolverSpec::Method::Evolve;
    if (method == SolverSpec::Method::Nullspace) {
        const Generator gen = make_generator(me);
        DensityMatrix rho = steady_state_nullspace(gen, nullspace_options(c));
        const double residual = gen.apply(rho.matrix()).norm();
        return SteadyResult{std::move(rho), true, 0.0, residual, "nullspace", {}};
    }
    return evolve_to_steady(me, build_initial_state(c), steady_options(c));
}

void run_steady(const ScenarioConfig& c, PointResult& out)
{
    const MasterEquation me = build_master_equation(c);
    const std::optional<StateVector> target = build_target(c);
    const bool dist = wants_distribution(c, out.sweep_value);
    const auto method = c.solver.method;

    auto record = [&](const char* label, const SteadyResult& r) {
        absorb(out.diagnostics, r.stats);
        SteadyReport rep = report_state(r.state, target, r.converged, r.residual, r.method);
        if (dist)
            out.distributions.push_back({label, nan, photon_distribution(r.state)});
        return rep;
    };

    if (method != SolverSpec::Method::Approximate)
        out.steady = record("exact", solve_exact(c, me));
    if (method == SolverSpec::Method::Approximate || method == SolverSpec::Method::CompareApproximate) {
        const SteadyResult r = approximate_steady_state(me, c.gadget.function(), nullspace_options(c), steady_options(c));
        SteadyReport rep = record("approximate", r);
        rep.method = "approximate:" + rep.method;
        if (method == SolverSpec::Method::Approximate)
            out.steady = rep;
        else
            out.approximate = rep;
    }
    if (c.solver.with_recurrence) {
        std::string name;
        DiagonalDistribution p = recurrence_for(c, name);
        out.recurrence = report_distribution(p, name);
        if (dist)
            out.distributions.push_back({"recurrence", nan, std::move(p)});
    }
    if (dist && c.output.poisson_reference && out.steady)
        out.distributions.push_back({"poisson", nan, DiagonalDistribution::poisson(out.steady->mean_n, c.dim)});
}

void run_recurrence(const ScenarioConfig& c, PointResult& out)
{
    std::string name;
    DiagonalDistribution p = recurrence_for(c, name);
    out.steady = report_distribution(p, name);
    if (wants_distribution(c, out.sweep_value)) {
        const double mean = p.mean();
        out.distributions.push_back({"recurrence", nan, std::move(p)});
        if (c.output.poisson_reference)
            out.distributions.push_back({"poisson", nan, DiagonalDistribution::poisson(mean, c.dim)});
    }
}

struct PointSpec {
    double series_value = nan;
    double sweep_value = nan;
};

std::string point_label(const ScenarioConfig& c, const PointSpec& p)
{
    std::string label;
    if (c.sweep && !c.sweep->series_parameter.empty())
        label += c.sweep->series_parameter + "=" + fmt(p.series_value) + " ";
    if (c.sweep)
        label += c.sweep->parameter + "=" + fmt(p.sweep_value);
    return label.empty() ? "point" : label;
}

std::vector<PointSpec> expand(const ScenarioConfig& c)
{
    if (!c.sweep)
        return {PointSpec{}};
    std::vector<PointSpec> points;
    const auto& sw = *c.sweep;
    const std::vector<double> series = sw.series_parameter.empty() ? std::vector<double>{nan} : sw.series_values;
    for (double s : series)
        for (double v : sw.values)
            points.push_back({s, v});
    return points;
}

ScenarioConfig point_config(const ScenarioConfig& c, const PointSpec& p)
{
    if (!c.sweep)
        return c;
    ScenarioConfig out = c;
    if (!c.sweep->series_parameter.empty())
        out = with_parameter(out, c.sweep->series_parameter, p.series_value);
    return with_parameter(out, c.sweep->parameter, p.sweep_value);
}

PointResult execute(const ScenarioConfig& c, double sweep_value)
{
    PointResult out;
    out.sweep_value = sweep_value;
    const auto start = std::chrono::steady_clock::now();
    switch (c.solver.mode) {
    case SolverSpec::Mode::Propagate:
        run_propagate(c, out);
        break;
    case SolverSpec::Mode::Steady:
        run_steady(c, out);
        break;
    case SolverSpec::Mode::Recurrence:
        run_recurrence(c, out);
        break;
    }
    out.ok = true;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

Provenance make_provenance(const ScenarioConfig& c)
{
    Provenance p;
    p.config_echo = c.echo();
    const DensityTolerances dt;
    const NullspaceOptions ns = nullspace_options(c);
    p.tolerances = {
        {"integrator", to_string(c.solver.integrator)},
        {"local_error_tol", fmt(c.solver.tol)},
        {"steady_residual_tol", fmt(c.solver.steady_tol)},
        {"nullspace_residual_tol", fmt(ns.residual_tol)},
        {"nullspace_uniqueness_tol", fmt(ns.uniqueness_tol)},
        {"nullspace_max_dim", std::to_string(ns.max_dim)},
        {"top_population_limit", fmt(c.solver.top_population_limit)},
        {"truncation_guard", c.truncation_guard ? "true" : "false"},
        {"density_trace_tol", fmt(dt.trace)},
        {"density_hermiticity_tol", fmt(dt.hermiticity)},
        {"density_min_eigenvalue", fmt(dt.min_eigenvalue)},
        {"recurrence_tail_guard", "1e-12"},
    };
    return p;
}

}  // namespace

bool ScenarioResult::all_ok() const
{
    return std::all_of(points.begin(), points.end(), [](const PointResult& p) { return p.ok; });
}

bool ScenarioResult::all_converged() const
{
    return std::all_of(points.begin(), points.end(), [](const PointResult& p) {
        return (!p.steady || p.steady->converged) && (!p.approximate || p.approximate->converged);
    });
}

int default_workers()
{
    if (const char* env = std::getenv("NLDISS_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<int>(std::min<long>(v, 1024));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

PointResult run_point(const ScenarioConfig& config)
{
    return execute(config, nan);
}

ScenarioResult run_sweep(const ScenarioConfig& config, const RunOptions& options)
{
    ScenarioResult result;
    result.name = config.output.name;
    result.mode = config.solver.mode;
    if (config.sweep) {
        result.sweep_parameter = config.sweep->parameter;
        result.series_parameter = config.sweep->series_parameter;
    }
    result.time_unit = config.solver.unit_nonlinear ? "gamma" : "Gamma";
    result.log_time = config.solver.log_spacing;
    result.provenance = make_provenance(config);

    const std::vector<PointSpec> specs = expand(config);
    result.points.resize(specs.size());

    std::mutex report_lock;
    auto work = [&](std::size_t i) {
        PointResult r;
        try {
            r = execute(point_config(config, specs[i]), specs[i].sweep_value);
        } catch (const ConfigError& e) {
            r = PointResult{};
            r.error_class = 1;
            r.error = point_label(config, specs[i]) + ": " + e.what();
        } catch (const std::exception& e) {
            r = PointResult{};
            r.error_class = 2;
            r.error = point_label(config, specs[i]) + ": " + e.what();
        }
        r.sweep_value = specs[i].sweep_value;
        r.series_value = specs[i].series_value;
        result.points[i] = std::move(r);
        if (options.progress) {
            std::lock_guard lock(report_lock);
            options.progress(i, result.points[i]);
        }
    };

    const int workers = std::min<int>(options.workers > 0 ? options.workers : default_workers(),
                                      static_cast<int>(specs.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i)
            work(i);
        return result;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < specs.size(); i = next++)
                work(i);
        });
    pool.clear();
    return result;
}

std::vector<std::string> validate_scenario(const ScenarioConfig& config)
{
    std::vector<std::string> warnings;
    for (const PointSpec& p : expand(config)) {
        const ScenarioConfig c = point_config(config, p);
        const std::string label = point_label(config, p);
        try {
            const MasterEquation me = build_master_equation(c);
            (void)me;
            (void)build_initial_state(c);
            if (c.solver.mode == SolverSpec::Mode::Propagate)
                (void)build_time_grid(c);
            if (c.solver.mode == SolverSpec::Mode::Steady && c.solver.method == SolverSpec::Method::Nullspace &&
                c.dim > c.solver.nullspace_max_dim)
                throw ConfigError("solver.method: nullspace needs dim <= solver.nullspace_max_dim (" +
                                  std::to_string(c.solver.nullspace_max_dim) + ")");
            if (c.solver.method == SolverSpec::Method::Approximate ||
                c.solver.method == SolverSpec::Method::CompareApproximate)
                (void)approximate_generator(me, c.gadget.function());
            if (c.solver.mode == SolverSpec::Mode::Recurrence || c.solver.with_recurrence) {
                std::string name;
                (void)recurrence_for(c, name);
            }
        } catch (const TruncationLeakageError& e) {
            std::string msg = label + ": " + e.what();
            if (e.minimal_dim() > 0)
                msg += " (minimal dim " + std::to_string(e.minimal_dim()) + ")";
            throw TruncationLeakageError(msg, e.minimal_dim());
        } catch (const ConfigError& e) {
            throw ConfigError(label + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(label + ": " + e.what());
        }
        if (c.gadget.kind == GadgetSpec::Kind::Projector && c.gadget.k == 1)
            warnings.push_back(label + ": gadget.k = 1 is outside the design regime k > 1");
    }
    std::sort(warnings.begin(), warnings.end());
    warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
    return warnings;
}

// Presets ------------------------------------------------------------------

namespace {

const char* const fig1_projector = R"ini(
[system]
dim = 90
gamma_linear = 1
gamma_nonlinear = 0.2
nbar = 0
omega = 0

[gadget]
kind = projector
target = fock:2
source = initial
k = 2

[initial]
state = coherent:2

[solver]
mode = propagate
t_end = 0.5
t_points = 1001
spacing = linear
time_unit = Gamma
tol = 1e-9

[sweep]
parameter = alpha
values = 2,3,4,5

[output]
distribution_at = max_fidelity
)ini";

const char* const fig1_ncl = R"ini(
[system]
dim = 130
gamma_linear = 1
gamma_nonlinear = 0.2
nbar = 0
omega = 0

[gadget]
kind = ncl
f = x-1

[initial]
state = coherent:2

[solver]
mode = propagate
spacing = log
t_first = 1e-5
t_end = 1
t_points = 121
include_zero = true
time_unit = Gamma
tol = 1e-9

[sweep]
parameter = alpha
values = 2,4,6,8

[output]
distribution_at = min_q
poisson_reference = true
)ini";

// Steady NCL sweeps over alpha0; `extra` lands in [solver].
std::string fig2_ncl(const std::string& name, const std::string& f, const std::string& solver,
                     const std::string& series)
{
    return "[system]\ndim = 64\ngamma_nonlinear = 1\nepsilon = 1\nnbar = 0\n\n"
           "[gadget]\nkind = ncl\nf = " + f + "\n\n"
           "[initial]\nstate = vacuum\n\n"
           "[solver]\nmode = steady\n" + solver + "\n"
           "[sweep]\nparameter = alpha0\ngrid = log:1:150:40\n" + series + "\n"
           "[output]\nname = " + name + "\ndistribution_at = final\ndistribution_values = 150\n";
}

std::map<std::string, std::string> build_presets()
{
    std::map<std::string, std::string> p;
    p["fig1a"] = std::string(fig1_projector) + "name = fig1a\n";
    p["fig1b"] = std::string(fig1_projector) + "name = fig1b\n";
    p["fig1c"] = std::string(fig1_ncl) + "name = fig1c\n";
    p["fig1d"] = std::string(fig1_ncl) + "name = fig1d\n";

    // fig2a overlays three linear-loss rates.
    p["fig2a"] = fig2_ncl("fig2a", "x-1", "method = auto\n", "series_parameter = epsilon\nseries_values = 1,5,10\n");
    p["fig2b"] = fig2_ncl("fig2b", "x-1", "method = compare-approximate\nwith_recurrence = true\n", "");
    p["fig2c"] = fig2_ncl("fig2c", "(x-1)^2", "method = compare-approximate\nwith_recurrence = true\n", "");
    p["fig2d"] = R"ini(
[system]
dim = 48
gamma_linear = 1
gamma_nonlinear = 0.2
omega = 0
nbar = 1

[gadget]
kind = ncl
f = (x-1)^3

[initial]
state = vacuum

[solver]
mode = steady
method = nullspace
with_recurrence = true
recurrence = thermal

[sweep]
parameter = nbar
grid = linear:0.25:10:40

[output]
name = fig2d
distribution_at = none
)ini";
    return p;
}

const std::map<std::string, std::string>& presets()
{
    static const std::map<std::string, std::string> p = build_presets();
    return p;
}

}  // namespace

const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, v] : presets())
            n.push_back(k);
        return n;
    }();
    return names;
}

const std::string& preset_text(const std::string& name)
{
    const auto it = presets().find(name);
    if (it == presets().end()) {
        std::string known;
        for (const auto& n : preset_names())
            known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

ScenarioConfig preset_config(const std::string& name, const std::vector<std::string>& overrides)
{
    return parse_config(preset_text(name), overrides);
}

ScenarioResult run_preset(const std::string& name, const std::vector<std::string>& overrides,
                          const RunOptions& options)
{
    ScenarioResult r = run_sweep(preset_config(name, overrides), options);
    r.provenance.preset = name;
    return r;
}

}  // namespace nldiss
