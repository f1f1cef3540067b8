#include "nldiss/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nldiss/errors.hpp"
#include "nldiss/gadgets.hpp"

namespace nldiss {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"system", {"dim", "gamma_linear", "gamma_nonlinear", "nbar", "omega", "alpha0", "epsilon",
                    "truncation_guard"}},
        {"gadget", {"kind", "f", "f_power", "f_shift", "f_coefficients", "f_table", "target", "source", "k"}},
        {"initial", {"state"}},
        {"solver", {"mode", "method", "t_end", "t_points", "spacing", "t_first", "include_zero", "time_unit",
                    "tol", "integrator", "fixed_step", "top_population_limit", "t_max", "steady_tol",
                    "nullspace_max_dim", "with_recurrence", "recurrence", "recurrence_start"}},
        {"sweep", {"parameter", "values", "grid", "series_parameter", "series_values"}},
        {"output", {"name", "distribution_at", "poisson_reference", "distribution_values"}},
    };
    return keys;
}

const std::set<std::string>& sweep_parameters()
{
    static const std::set<std::string> names{"alpha", "alpha0", "epsilon", "nbar", "omega",
                                             "gamma_linear", "gamma_nonlinear", "k", "dim"};
    return names;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& text, const std::string& field)
{
    const std::string s = trim(text);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(field + ": expected a finite number, got '" + text + "'");
    return v;
}

int to_int(const std::string& text, const std::string& field)
{
    const std::string s = trim(text);
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end)
        throw ConfigError(field + ": expected an integer, got '" + text + "'");
    return v;
}

bool to_bool(const std::string& text, const std::string& field)
{
    std::string s = trim(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1")
        return true;
    if (s == "false" || s == "no" || s == "off" || s == "0")
        return false;
    throw ConfigError(field + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& text, const std::string& field)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(item, field));
    if (out.empty())
        throw ConfigError(field + ": empty list");
    return out;
}

// "linear:a:b:n" or "log:a:b:n"
std::vector<double> to_grid(const std::string& text, const std::string& field)
{
    std::vector<std::string> parts;
    std::stringstream ss(trim(text));
    std::string item;
    while (std::getline(ss, item, ':'))
        parts.push_back(trim(item));
    if (parts.size() != 4 || (parts[0] != "linear" && parts[0] != "log"))
        throw ConfigError(field + ": expected linear:START:STOP:COUNT or log:START:STOP:COUNT, got '" + text + "'");
    const double a = to_double(parts[1], field);
    const double b = to_double(parts[2], field);
    const int n = to_int(parts[3], field);
    if (n < 1)
        throw ConfigError(field + ": COUNT must be >= 1");
    if (n == 1)
        return {a};
    if (parts[0] == "log") {
        if (a <= 0.0 || b <= 0.0)
            throw ConfigError(field + ": log grid bounds must be positive");
        return log_grid(a, b, n);
    }
    return linear_grid(a, b, n);
}

std::string join(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ",";
        out += fmt(values[i]);
    }
    return out;
}

void require_nonnegative(double v, const std::string& field)
{
    if (v < 0.0)
        throw ConfigError(field + ": must be >= 0 (got " + fmt(v) + ")");
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> get(const std::string& section, const std::string& key) const
    {
        const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
        if (!sec)
            return std::nullopt;
        const auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!value)
            return std::nullopt;
        return trim(*value);
    }

    bool has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

    double num(const std::string& section, const std::string& key, double fallback) const
    {
        const auto v = get(section, key);
        return v ? to_double(*v, section + "." + key) : fallback;
    }

    int integer(const std::string& section, const std::string& key, int fallback) const
    {
        const auto v = get(section, key);
        return v ? to_int(*v, section + "." + key) : fallback;
    }

    bool flag(const std::string& section, const std::string& key, bool fallback) const
    {
        const auto v = get(section, key);
        return v ? to_bool(*v, section + "." + key) : fallback;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        const auto v = get(section, key);
        return v ? *v : fallback;
    }

private:
    const pt::ptree& tree_;
};

void check_schema(const pt::ptree& tree)
{
    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (it == schema().end()) {
            if (body.empty() && !body.data().empty())
                throw ConfigError(section + ": key outside any section");
            throw ConfigError("[" + section + "]: unknown section");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key))
                throw ConfigError(section + "." + key + ": unknown key");
        }
    }
}

void apply_override(pt::ptree& tree, const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + text + "': expected section.key=value");
    const std::string path = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
        throw ConfigError("override '" + text + "': expected section.key=value");
    const std::string section = path.substr(0, dot);
    const std::string key = path.substr(dot + 1);
    const auto it = schema().find(section);
    if (it == schema().end())
        throw ConfigError("override '" + text + "': unknown section " + section);
    if (!it->second.count(key))
        throw ConfigError(section + "." + key + ": unknown key");
    auto sec = tree.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec)
        tree.push_back({section, pt::ptree{}});
    tree.get_child(pt::ptree::path_type(section, '\0')).put(pt::ptree::path_type(key, '\0'), value);
}

StateVector pure_state(const StateSpec& spec, int dim, bool guard, const std::string& field)
{
    switch (spec.kind) {
    case StateSpec::Kind::Vacuum:
        return fock_state(0, dim);
    case StateSpec::Kind::Fock:
        if (spec.n >= dim)
            throw ConfigError(field + ": Fock level " + std::to_string(spec.n) + " does not fit in dim " +
                              std::to_string(dim));
        return fock_state(spec.n, dim);
    case StateSpec::Kind::Coherent:
        return coherent_state(spec.alpha, dim, guard);
    case StateSpec::Kind::Thermal:
        break;
    }
    throw ConfigError(field + ": a thermal state is not a pure state");
}

ScenarioConfig interpret(const pt::ptree& tree)
{
    check_schema(tree);
    const Reader r(tree);
    ScenarioConfig c;

    if (!r.has("system", "dim"))
        throw ConfigError("system.dim: missing");
    c.dim = r.integer("system", "dim", 0);
    if (c.dim < 2)
        throw InvalidDimensionError("system.dim: must be >= 2 (got " + std::to_string(c.dim) + ")");
    c.gamma_linear = r.num("system", "gamma_linear", 0.0);
    c.gamma_nonlinear = r.num("system", "gamma_nonlinear", 0.0);
    c.nbar = r.num("system", "nbar", 0.0);
    c.omega = r.num("system", "omega", 0.0);
    c.truncation_guard = r.flag("system", "truncation_guard", true);
    require_nonnegative(c.gamma_linear, "system.gamma_linear");
    require_nonnegative(c.gamma_nonlinear, "system.gamma_nonlinear");
    require_nonnegative(c.nbar, "system.nbar");
    require_nonnegative(c.omega, "system.omega");

    if (r.has("system", "alpha0")) {
        if (r.has("system", "omega"))
            throw ConfigError("system.alpha0: conflicts with system.omega");
        if (c.gamma_nonlinear <= 0.0)
            throw ConfigError("system.alpha0: requires system.gamma_nonlinear > 0");
        const double a0 = r.num("system", "alpha0", 0.0);
        require_nonnegative(a0, "system.alpha0");
        c.omega = a0 * c.gamma_nonlinear;
    }
    if (r.has("system", "epsilon")) {
        if (r.has("system", "gamma_linear"))
            throw ConfigError("system.epsilon: conflicts with system.gamma_linear");
        if (c.gamma_nonlinear <= 0.0)
            throw ConfigError("system.epsilon: requires system.gamma_nonlinear > 0");
        const double eps = r.num("system", "epsilon", 0.0);
        require_nonnegative(eps, "system.epsilon");
        c.gamma_linear = eps * c.gamma_nonlinear;
    }

    // gadget
    const std::string kind = r.text("gadget", "kind", "");
    if (kind == "ncl") {
        c.gadget.kind = GadgetSpec::Kind::Ncl;
        for (const char* key : {"target", "source", "k"})
            if (r.has("gadget", key))
                throw ConfigError(std::string("gadget.") + key + ": only valid for kind = projector");
        c.gadget.f_name = r.text("gadget", "f", "x-1");
        c.gadget.f_power = r.integer("gadget", "f_power", 1);
        if (c.gadget.f_name == "poly") {
            if (!r.has("gadget", "f_coefficients"))
                throw ConfigError("gadget.f_coefficients: required for f = poly");
            c.gadget.f_shift = r.num("gadget", "f_shift", 0.0);
            c.gadget.f_coefficients = to_list(*r.get("gadget", "f_coefficients"), "gadget.f_coefficients");
        } else if (c.gadget.f_name == "table") {
            if (!r.has("gadget", "f_table"))
                throw ConfigError("gadget.f_table: required for f = table");
            c.gadget.f_table = to_list(*r.get("gadget", "f_table"), "gadget.f_table");
        } else {
            const auto& names = NonlinearFunction::preset_names();
            if (std::find(names.begin(), names.end(), c.gadget.f_name) == names.end())
                throw ConfigError("gadget.f: unknown function '" + c.gadget.f_name +
                                  "' (presets, poly or table)");
            if (c.gadget.f_name == "x^k" && c.gadget.f_power < 1)
                throw ConfigError("gadget.f_power: must be >= 1");
        }
    } else if (kind == "projector") {
        c.gadget.kind = GadgetSpec::Kind::Projector;
        for (const char* key : {"f", "f_power", "f_shift", "f_coefficients", "f_table"})
            if (r.has("gadget", key))
                throw ConfigError(std::string("gadget.") + key + ": only valid for kind = ncl");
        if (!r.has("gadget", "target"))
            throw ConfigError("gadget.target: missing");
        if (!r.has("gadget", "source"))
            throw ConfigError("gadget.source: missing");
        c.gadget.target = StateSpec::parse(*r.get("gadget", "target"), "gadget.target");
        const std::string source = *r.get("gadget", "source");
        c.gadget.source_is_initial = source == "initial";
        if (!c.gadget.source_is_initial)
            c.gadget.source = StateSpec::parse(source, "gadget.source");
        c.gadget.k = r.integer("gadget", "k", 2);
        if (c.gadget.k < 1)
            throw ConfigError("gadget.k: must be >= 1");
    } else {
        throw ConfigError("gadget.kind: expected ncl or projector, got '" + kind + "'");
    }

    c.initial = StateSpec::parse(r.text("initial", "state", "vacuum"), "initial.state");

    // solver
    auto& s = c.solver;
    const std::string mode = r.text("solver", "mode", "propagate");
    if (mode == "propagate")
        s.mode = SolverSpec::Mode::Propagate;
    else if (mode == "steady")
        s.mode = SolverSpec::Mode::Steady;
    else if (mode == "recurrence")
        s.mode = SolverSpec::Mode::Recurrence;
    else
        throw ConfigError("solver.mode: expected propagate, steady or recurrence, got '" + mode + "'");

    const std::string method = r.text("solver", "method", "auto");
    if (method == "auto")
        s.method = SolverSpec::Method::Auto;
    else if (method == "nullspace")
        s.method = SolverSpec::Method::Nullspace;
    else if (method == "evolve")
        s.method = SolverSpec::Method::Evolve;
    else if (method == "approximate")
        s.method = SolverSpec::Method::Approximate;
    else if (method == "compare-approximate")
        s.method = SolverSpec::Method::CompareApproximate;
    else
        throw ConfigError("solver.method: expected auto, nullspace, evolve, approximate or compare-approximate, got '" +
                          method + "'");

    s.t_end = r.num("solver", "t_end", s.t_end);
    s.t_points = r.integer("solver", "t_points", s.t_points);
    const std::string spacing = r.text("solver", "spacing", "linear");
    if (spacing != "linear" && spacing != "log")
        throw ConfigError("solver.spacing: expected linear or log, got '" + spacing + "'");
    s.log_spacing = spacing == "log";
    s.t_first = r.num("solver", "t_first", s.t_first);
    s.include_zero = r.flag("solver", "include_zero", s.include_zero);
    const std::string unit = r.text("solver", "time_unit", "Gamma");
    if (unit != "Gamma" && unit != "gamma")
        throw ConfigError("solver.time_unit: expected Gamma or gamma, got '" + unit + "'");
    s.unit_nonlinear = unit == "gamma";
    s.tol = r.num("solver", "tol", s.tol);
    s.integrator = [&] {
        try {
            return parse_integrator(r.text("solver", "integrator", "auto"));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("solver.integrator: ") + e.what());
        }
    }();
    s.fixed_step = r.num("solver", "fixed_step", 0.0);
    s.top_population_limit = r.num("solver", "top_population_limit", s.top_population_limit);
    s.t_max = r.num("solver", "t_max", s.t_max);
    s.steady_tol = r.num("solver", "steady_tol", s.steady_tol);
    s.nullspace_max_dim = r.integer("solver", "nullspace_max_dim", s.nullspace_max_dim);
    s.with_recurrence = r.flag("solver", "with_recurrence", false);
    const std::string rec = r.text("solver", "recurrence", "auto");
    if (rec == "auto")
        s.recurrence = SolverSpec::Recurrence::Auto;
    else if (rec == "ncl")
        s.recurrence = SolverSpec::Recurrence::Ncl;
    else if (rec == "thermal")
        s.recurrence = SolverSpec::Recurrence::Thermal;
    else
        throw ConfigError("solver.recurrence: expected auto, ncl or thermal, got '" + rec + "'");
    const std::string start = r.text("solver", "recurrence_start", "auto");
    s.recurrence_start = start == "auto" ? -1 : to_int(start, "solver.recurrence_start");

    if (s.t_end <= 0.0)
        throw ConfigError("solver.t_end: must be > 0");
    if (s.t_points < 2)
        throw ConfigError("solver.t_points: must be >= 2");
    if (s.log_spacing && (s.t_first <= 0.0 || s.t_first >= s.t_end))
        throw ConfigError("solver.t_first: must satisfy 0 < t_first < t_end for a log grid");
    if (s.tol <= 0.0)
        throw ConfigError("solver.tol: must be > 0");
    if (s.integrator == Integrator::Rk4Fixed && s.fixed_step <= 0.0)
        throw ConfigError("solver.fixed_step: must be > 0 for integrator rk4");
    if (s.fixed_step < 0.0)
        throw ConfigError("solver.fixed_step: must be >= 0");
    if (s.top_population_limit <= 0.0)
        throw ConfigError("solver.top_population_limit: must be > 0");
    if (s.t_max <= 0.0)
        throw ConfigError("solver.t_max: must be > 0");
    if (s.steady_tol <= 0.0)
        throw ConfigError("solver.steady_tol: must be > 0");
    if (s.nullspace_max_dim < 2)
        throw ConfigError("solver.nullspace_max_dim: must be >= 2");
    if (s.recurrence_start < -1)
        throw ConfigError("solver.recurrence_start: must be auto or >= 0");
    const bool approx = s.method == SolverSpec::Method::Approximate ||
                        s.method == SolverSpec::Method::CompareApproximate;
    if (approx && c.gadget.kind != GadgetSpec::Kind::Ncl)
        throw ConfigError("solver.method: the approximate equation needs gadget.kind = ncl");
    if (s.mode == SolverSpec::Mode::Recurrence && c.gadget.kind != GadgetSpec::Kind::Ncl)
        throw ConfigError("solver.mode: recurrence needs gadget.kind = ncl");

    // sweep
    if (tree.get_child_optional("sweep")) {
        SweepSpec sw;
        sw.parameter = r.text("sweep", "parameter", "");
        if (!sweep_parameters().count(sw.parameter))
            throw ConfigError("sweep.parameter: unknown parameter '" + sw.parameter + "'");
        if (r.has("sweep", "values") == r.has("sweep", "grid"))
            throw ConfigError("sweep.values: give exactly one of sweep.values and sweep.grid");
        sw.values = r.has("sweep", "values") ? to_list(*r.get("sweep", "values"), "sweep.values")
                                             : to_grid(*r.get("sweep", "grid"), "sweep.grid");
        if (r.has("sweep", "series_parameter")) {
            sw.series_parameter = *r.get("sweep", "series_parameter");
            if (!sweep_parameters().count(sw.series_parameter))
                throw ConfigError("sweep.series_parameter: unknown parameter '" + sw.series_parameter + "'");
            if (sw.series_parameter == sw.parameter)
                throw ConfigError("sweep.series_parameter: must differ from sweep.parameter");
            if (!r.has("sweep", "series_values"))
                throw ConfigError("sweep.series_values: required with sweep.series_parameter");
            sw.series_values = to_list(*r.get("sweep", "series_values"), "sweep.series_values");
        } else if (r.has("sweep", "series_values")) {
            throw ConfigError("sweep.series_values: needs sweep.series_parameter");
        }
        c.sweep = std::move(sw);
    }

    // output
    c.output.name = r.text("output", "name", "scenario");
    if (c.output.name.empty() || c.output.name.find_first_of("/\\ ") != std::string::npos)
        throw ConfigError("output.name: must be a nonempty file stem without spaces or slashes");
    const std::string at = r.text("output", "distribution_at", "final");
    if (at == "none")
        c.output.distribution_at = OutputSpec::DistributionAt::None;
    else if (at == "final")
        c.output.distribution_at = OutputSpec::DistributionAt::Final;
    else if (at == "max_fidelity")
        c.output.distribution_at = OutputSpec::DistributionAt::MaxFidelity;
    else if (at == "min_q")
        c.output.distribution_at = OutputSpec::DistributionAt::MinQ;
    else
        throw ConfigError("output.distribution_at: expected none, final, max_fidelity or min_q, got '" + at + "'");
    if (c.output.distribution_at == OutputSpec::DistributionAt::MaxFidelity &&
        c.gadget.kind != GadgetSpec::Kind::Projector)
        throw ConfigError("output.distribution_at: max_fidelity needs a projector gadget target");
    c.output.poisson_reference = r.flag("output", "poisson_reference", false);
    if (r.has("output", "distribution_values"))
        c.output.distribution_values = to_list(*r.get("output", "distribution_values"), "output.distribution_values");

    return c;
}

}  // namespace

StateSpec StateSpec::parse(const std::string& raw, const std::string& field)
{
    const std::string text = trim(raw);
    StateSpec s;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "vacuum" && colon == std::string::npos) {
        s.kind = Kind::Vacuum;
    } else if (head == "fock" && !arg.empty()) {
        s.kind = Kind::Fock;
        s.n = to_int(arg, field);
        if (s.n < 0)
            throw ConfigError(field + ": Fock level must be >= 0");
    } else if (head == "coherent" && !arg.empty()) {
        s.kind = Kind::Coherent;
        const auto comma = arg.find(',');
        const double re = to_double(arg.substr(0, comma), field);
        const double im = comma == std::string::npos ? 0.0 : to_double(arg.substr(comma + 1), field);
        s.alpha = complex(re, im);
    } else if (head == "thermal" && !arg.empty()) {
        s.kind = Kind::Thermal;
        s.nbar = to_double(arg, field);
        if (s.nbar < 0.0)
            throw ConfigError(field + ": thermal occupation must be >= 0");
    } else {
        throw ConfigError(field + ": expected vacuum, fock:N, coherent:RE[,IM] or thermal:NBAR, got '" + raw + "'");
    }
    return s;
}

std::string StateSpec::to_string() const
{
    switch (kind) {
    case Kind::Vacuum:
        return "vacuum";
    case Kind::Fock:
        return "fock:" + std::to_string(n);
    case Kind::Coherent:
        return alpha.imag() == 0.0 ? "coherent:" + fmt(alpha.real())
                                   : "coherent:" + fmt(alpha.real()) + "," + fmt(alpha.imag());
    case Kind::Thermal:
        return "thermal:" + fmt(nbar);
    }
    return {};
}

NonlinearFunction GadgetSpec::function() const
{
    if (f_name == "poly")
        return NonlinearFunction::polynomial(f_shift, f_coefficients);
    if (f_name == "table")
        return NonlinearFunction::tabulated(f_table);
    return NonlinearFunction::preset(f_name, f_power);
}

double ScenarioConfig::alpha0() const
{
    if (gamma_nonlinear <= 0.0)
        throw ConfigError("alpha0: undefined for gamma_nonlinear = 0");
    return omega / gamma_nonlinear;
}

double ScenarioConfig::epsilon() const
{
    if (gamma_nonlinear <= 0.0)
        throw ConfigError("epsilon: undefined for gamma_nonlinear = 0");
    return gamma_linear / gamma_nonlinear;
}

std::string ScenarioConfig::echo() const
{
    std::ostringstream out;
    out << "[system]\n"
        << "dim = " << dim << "\n"
        << "gamma_linear = " << fmt(gamma_linear) << "\n"
        << "gamma_nonlinear = " << fmt(gamma_nonlinear) << "\n"
        << "nbar = " << fmt(nbar) << "\n"
        << "omega = " << fmt(omega) << "\n"
        << "truncation_guard = " << (truncation_guard ? "true" : "false") << "\n\n";

    out << "[gadget]\n";
    if (gadget.kind == GadgetSpec::Kind::Ncl) {
        out << "kind = ncl\n"
            << "f = " << gadget.f_name << "\n";
        if (gadget.f_name == "x^k")
            out << "f_power = " << gadget.f_power << "\n";
        if (gadget.f_name == "poly")
            out << "f_shift = " << fmt(gadget.f_shift) << "\n"
                << "f_coefficients = " << join(gadget.f_coefficients) << "\n";
        if (gadget.f_name == "table")
            out << "f_table = " << join(gadget.f_table) << "\n";
    } else {
        out << "kind = projector\n"
            << "target = " << gadget.target.to_string() << "\n"
            << "source = " << (gadget.source_is_initial ? std::string("initial") : gadget.source.to_string()) << "\n"
            << "k = " << gadget.k << "\n";
    }
    out << "\n[initial]\nstate = " << initial.to_string() << "\n\n";

    const auto& s = solver;
    static const char* modes[] = {"propagate", "steady", "recurrence"};
    static const char* methods[] = {"auto", "nullspace", "evolve", "approximate", "compare-approximate"};
    static const char* recs[] = {"auto", "ncl", "thermal"};
    out << "[solver]\n"
        << "mode = " << modes[static_cast<int>(s.mode)] << "\n"
        << "method = " << methods[static_cast<int>(s.method)] << "\n"
        << "t_end = " << fmt(s.t_end) << "\n"
        << "t_points = " << s.t_points << "\n"
        << "spacing = " << (s.log_spacing ? "log" : "linear") << "\n"
        << "t_first = " << fmt(s.t_first) << "\n"
        << "include_zero = " << (s.include_zero ? "true" : "false") << "\n"
        << "time_unit = " << (s.unit_nonlinear ? "gamma" : "Gamma") << "\n"
        << "tol = " << fmt(s.tol) << "\n"
        << "integrator = " << to_string(s.integrator) << "\n"
        << "fixed_step = " << fmt(s.fixed_step) << "\n"
        << "top_population_limit = " << fmt(s.top_population_limit) << "\n"
        << "t_max = " << fmt(s.t_max) << "\n"
        << "steady_tol = " << fmt(s.steady_tol) << "\n"
        << "nullspace_max_dim = " << s.nullspace_max_dim << "\n"
        << "with_recurrence = " << (s.with_recurrence ? "true" : "false") << "\n"
        << "recurrence = " << recs[static_cast<int>(s.recurrence)] << "\n"
        << "recurrence_start = " << (s.recurrence_start < 0 ? std::string("auto") : std::to_string(s.recurrence_start))
        << "\n";

    if (sweep) {
        out << "\n[sweep]\n"
            << "parameter = " << sweep->parameter << "\n"
            << "values = " << join(sweep->values) << "\n";
        if (!sweep->series_parameter.empty())
            out << "series_parameter = " << sweep->series_parameter << "\n"
                << "series_values = " << join(sweep->series_values) << "\n";
    }

    static const char* ats[] = {"none", "final", "max_fidelity", "min_q"};
    out << "\n[output]\n"
        << "name = " << output.name << "\n"
        << "distribution_at = " << ats[static_cast<int>(output.distribution_at)] << "\n"
        << "poisson_reference = " << (output.poisson_reference ? "true" : "false") << "\n";
    if (!output.distribution_values.empty())
        out << "distribution_values = " << join(output.distribution_values) << "\n";
    return out.str();
}

ScenarioConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides)
{
    pt::ptree tree;
    std::istringstream in(ini_text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& o : overrides)
        apply_override(tree, o);
    return interpret(tree);
}

ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), overrides);
}

ScenarioConfig with_parameter(const ScenarioConfig& config, const std::string& parameter, double value)
{
    ScenarioConfig c = config;
    const std::string field = "sweep " + parameter + "=" + fmt(value);
    if (!std::isfinite(value))
        throw ConfigError(field + ": value must be finite");
    if (parameter == "alpha") {
        if (c.initial.kind != StateSpec::Kind::Coherent)
            throw ConfigError(field + ": alpha sweeps need a coherent initial state");
        c.initial.alpha = complex(value, 0.0);
    } else if (parameter == "alpha0") {
        require_nonnegative(value, field);
        c.omega = value * c.gamma_nonlinear;
        if (c.gamma_nonlinear <= 0.0)
            throw ConfigError(field + ": needs gamma_nonlinear > 0");
    } else if (parameter == "epsilon") {
        require_nonnegative(value, field);
        if (c.gamma_nonlinear <= 0.0)
            throw ConfigError(field + ": needs gamma_nonlinear > 0");
        c.gamma_linear = value * c.gamma_nonlinear;
    } else if (parameter == "nbar") {
        require_nonnegative(value, field);
        c.nbar = value;
    } else if (parameter == "omega") {
        require_nonnegative(value, field);
        c.omega = value;
    } else if (parameter == "gamma_linear") {
        require_nonnegative(value, field);
        c.gamma_linear = value;
    } else if (parameter == "gamma_nonlinear") {
        require_nonnegative(value, field);
        c.gamma_nonlinear = value;
    } else if (parameter == "k" || parameter == "dim") {
        if (value != std::floor(value))
            throw ConfigError(field + ": must be an integer");
        if (parameter == "k") {
            if (c.gadget.kind != GadgetSpec::Kind::Projector || value < 1)
                throw ConfigError(field + ": k sweeps need a projector gadget and k >= 1");
            c.gadget.k = static_cast<int>(value);
        } else {
            if (value < 2)
                throw InvalidDimensionError(field + ": must be >= 2");
            c.dim = static_cast<int>(value);
        }
    } else {
        throw ConfigError("sweep.parameter: unknown parameter '" + parameter + "'");
    }
    return c;
}

std::optional<StateVector> build_target(const ScenarioConfig& config)
{
    if (config.gadget.kind != GadgetSpec::Kind::Projector)
        return std::nullopt;
    return pure_state(config.gadget.target, config.dim, config.truncation_guard, "gadget.target");
}

MasterEquation build_master_equation(const ScenarioConfig& c)
{
    if (c.gadget.kind == GadgetSpec::Kind::Ncl)
        return ncl_master_equation(c.dim, c.gamma_linear, c.gamma_nonlinear, c.nbar, c.omega, c.gadget.function());
    const StateVector target = *build_target(c);
    const StateVector source = c.gadget.source_is_initial
                                   ? pure_state(c.initial, c.dim, c.truncation_guard, "gadget.source (initial)")
                                   : pure_state(c.gadget.source, c.dim, c.truncation_guard, "gadget.source");
    const ProjectorGadget g(target, source, c.gadget.k, c.truncation_guard);
    return projector_master_equation(g, c.gamma_linear, c.gamma_nonlinear, c.nbar, c.omega);
}

DensityMatrix build_initial_state(const ScenarioConfig& c)
{
    if (c.initial.kind == StateSpec::Kind::Thermal)
        return thermal_state(c.initial.nbar, c.dim, c.truncation_guard);
    return DensityMatrix::pure(pure_state(c.initial, c.dim, c.truncation_guard, "initial.state"));
}

double time_unit_rate(const ScenarioConfig& c)
{
    const double rate = c.solver.unit_nonlinear ? c.gamma_nonlinear : c.gamma_linear;
    if (rate <= 0.0)
        throw ConfigError(std::string("solver.time_unit: ") + (c.solver.unit_nonlinear ? "gamma" : "Gamma") +
                          " is zero, choose the other unit");
    return rate;
}

std::vector<double> build_time_grid(const ScenarioConfig& c)
{
    const auto& s = c.solver;
    std::vector<double> grid = s.log_spacing ? log_grid(s.t_first, s.t_end, s.t_points)
                                             : linear_grid(0.0, s.t_end, s.t_points);
    if (s.log_spacing && s.include_zero)
        grid.insert(grid.begin(), 0.0);
    const double rate = time_unit_rate(c);
    for (double& t : grid)
        t /= rate;
    return grid;
}

}  // namespace nldiss
