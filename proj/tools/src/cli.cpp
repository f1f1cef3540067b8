#include "nldiss/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "nldiss/config.hpp"
#include "nldiss/errors.hpp"
#include "nldiss/output.hpp"
#include "nldiss/scenarios.hpp"

namespace nldiss::cli {

namespace {

struct Options {
    std::string target;
    std::string out_dir;
    bool no_svg = false;
    bool quiet = false;
    int workers = 0;
    std::vector<std::string> overrides;
};

void print_point(std::ostream& err, std::size_t index, std::size_t total, const ScenarioResult& proto,
                 const PointResult& p)
{
    err << "[" << index + 1 << "/" << total << "] ";
    if (!proto.series_parameter.empty())
        err << proto.series_parameter << "=" << format_number(p.series_value) << " ";
    if (!proto.sweep_parameter.empty())
        err << proto.sweep_parameter << "=" << format_number(p.sweep_value) << " ";
    if (!p.ok) {
        err << "FAILED: " << p.error << "\n";
        return;
    }
    if (p.steady)
        err << "Q=" << format_number(p.steady->mandel_q) << (p.steady->converged ? "" : " (unconverged)") << " ";
    else if (!p.series.empty())
        err << p.series.size() << " samples ";
    err << std::fixed << std::setprecision(2) << p.seconds << std::defaultfloat << " s\n";
}

// Steady and recurrence runs print their rows; time series are only written.
void print_summary(std::ostream& out, const ScenarioResult& r)
{
    if (r.mode == SolverSpec::Mode::Propagate) {
        for (const auto& p : r.points) {
            if (!p.ok || p.series.empty())
                continue;
            const auto& last = p.series.back();
            out << (r.sweep_parameter.empty() ? "" : r.sweep_parameter + "=" + format_number(p.sweep_value) + " ")
                << "t=" << format_number(last.time) << " mean_n=" << format_number(last.mean_n)
                << " mandel_q=" << format_number(last.mandel_q) << " fidelity=" << format_number(last.fidelity)
                << "\n";
        }
        return;
    }
    out << to_csv(Table{"", steady_columns, [&] {
                            std::vector<std::vector<double>> rows;
                            for (const auto& p : r.points)
                                if (p.ok && p.steady)
                                    rows.push_back({p.sweep_value, p.steady->mandel_q, p.steady->mean_n,
                                                    p.steady->purity, p.steady->converged ? 1.0 : 0.0});
                            return rows;
                        }()});
}

int finish(ScenarioResult& r, const Options& o, std::ostream& out, std::ostream& err)
{
    const std::string dir = o.out_dir.empty() ? (std::filesystem::path("results") / r.name).string() : o.out_dir;
    const auto files = write_bundle(r, dir, !o.no_svg);
    print_summary(out, r);
    if (!o.quiet)
        err << "wrote " << files.size() << " files to " << dir << "\n";

    int code = ok;
    for (const auto& p : r.points)
        if (!p.ok)
            code = std::max(code, p.error_class == 1 ? int(config_error) : int(numerical_error));
    if (code == config_error) {
        // A mix of config and numerical failures reports the numerical one.
        for (const auto& p : r.points)
            if (!p.ok && p.error_class == 2)
                code = numerical_error;
    }
    if (code == ok && !r.all_converged())
        code = unconverged;
    return code;
}

RunOptions run_options(const Options& o, std::ostream& err, const ScenarioConfig& cfg)
{
    RunOptions ro;
    ro.workers = o.workers;
    if (!o.quiet) {
        std::size_t total = 1;
        if (cfg.sweep)
            total = cfg.sweep->values.size() * std::max<std::size_t>(1, cfg.sweep->series_values.size());
        auto proto = std::make_shared<ScenarioResult>();
        if (cfg.sweep) {
            proto->sweep_parameter = cfg.sweep->parameter;
            proto->series_parameter = cfg.sweep->series_parameter;
        }
        ro.progress = [&err, total, proto](std::size_t i, const PointResult& p) { print_point(err, i, total, *proto, p); };
    }
    return ro;
}

int run_config(const Options& o, const std::string& forced_mode, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> overrides = o.overrides;
    if (!forced_mode.empty())
        overrides.push_back("solver.mode=" + forced_mode);
    const ScenarioConfig cfg = load_config(o.target, overrides);
    ScenarioResult r = run_sweep(cfg, run_options(o, err, cfg));
    return finish(r, o, out, err);
}

int run_figure(const Options& o, std::ostream& out, std::ostream& err)
{
    const ScenarioConfig cfg = preset_config(o.target, o.overrides);
    ScenarioResult r = run_sweep(cfg, run_options(o, err, cfg));
    r.provenance.preset = o.target;
    return finish(r, o, out, err);
}

int run_validate(const Options& o, std::ostream& out)
{
    const bool is_file = std::filesystem::exists(o.target);
    const auto& names = preset_names();
    const bool is_preset = !is_file && std::find(names.begin(), names.end(), o.target) != names.end();
    const ScenarioConfig cfg = is_preset ? preset_config(o.target, o.overrides) : load_config(o.target, o.overrides);
    for (const auto& w : validate_scenario(cfg))
        out << "warning: " << w << "\n";
    out << "ok: " << o.target << "\n";
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Lindblad dynamics and steady states of a driven, lossy cavity mode under engineered dissipation",
                 "nldiss"};
    app.set_version_flag("--version", std::string(version_string));
    app.require_subcommand(1);

    Options o;
    auto add_common = [&](CLI::App* sub, const char* what) {
        sub->add_option(what[0] == 'p' ? "preset" : "config", o.target, what)->required();
        sub->add_option("--override,-s", o.overrides, "Override a setting, section.key=value")->type_name("KEY=VALUE");
        sub->add_flag("--quiet,-q", o.quiet, "No progress output");
    };
    auto add_outputs = [&](CLI::App* sub) {
        sub->add_option("--out,-o", o.out_dir, "Output directory (default results/<name>)");
        sub->add_flag("--no-svg", o.no_svg, "Skip SVG plots");
        sub->add_option("--workers,-j", o.workers, "Parallel sweep points (default NLDISS_WORKERS or all cores)")
            ->check(CLI::NonNegativeNumber);
    };

    auto* evolve = app.add_subcommand("evolve", "Propagate the master equation over the configured time grid");
    auto* steady = app.add_subcommand("steady", "Compute steady states");
    auto* recurrence = app.add_subcommand("recurrence", "Evaluate the closed-form steady distributions");
    auto* sweep = app.add_subcommand("sweep", "Run a config as written");
    auto* figure = app.add_subcommand("figure", "Run a named preset");
    auto* validate = app.add_subcommand("validate", "Parse a config (or preset) and run the truncation guards");
    auto* presets = app.add_subcommand("presets", "List presets, or print one as INI");
    for (auto* sub : {evolve, steady, recurrence, sweep, validate}) {
        add_common(sub, "config file");
    }
    add_common(figure, "preset name");
    for (auto* sub : {evolve, steady, recurrence, sweep, figure})
        add_outputs(sub);
    std::string show;
    presets->add_option("name", show, "Preset to print");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << version_string << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return config_error;
    }

    try {
        if (evolve->parsed())
            return run_config(o, "propagate", out, err);
        if (steady->parsed())
            return run_config(o, "steady", out, err);
        if (recurrence->parsed())
            return run_config(o, "recurrence", out, err);
        if (sweep->parsed())
            return run_config(o, "", out, err);
        if (figure->parsed())
            return run_figure(o, out, err);
        if (validate->parsed())
            return run_validate(o, out);
        if (presets->parsed()) {
            if (show.empty())
                for (const auto& n : preset_names())
                    out << n << "\n";
            else
                out << preset_text(show);
            return ok;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return numerical_error;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return numerical_error;
    }
    return config_error;
}

}  // namespace nldiss::cli
