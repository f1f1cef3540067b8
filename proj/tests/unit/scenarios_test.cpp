#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "nldiss/errors.hpp"
#include "nldiss/output.hpp"
#include "nldiss/scenarios.hpp"
#include "nldiss/steady.hpp"

using namespace nldiss;

namespace {

const char* kRecurrence = R"ini(
[system]
dim = 80
gamma_linear = 0
gamma_nonlinear = 1
alpha0 = 100

[gadget]
kind = ncl
f = x-1

[solver]
mode = recurrence

[sweep]
parameter = alpha0
values = 10, 100, 1000

[output]
name = rec
)ini";

const char* kSteady = R"ini(
[system]
dim = 30
gamma_linear = 0.2
gamma_nonlinear = 1
alpha0 = 3

[gadget]
kind = ncl
f = x-1

[solver]
mode = steady
method = compare-approximate
with_recurrence = true

[sweep]
parameter = alpha0
values = 1, 3, 5

[output]
name = cmp
)ini";

std::vector<std::string> csv_texts(const ScenarioResult& r)
{
    std::vector<std::string> out;
    for (const auto& t : result_tables(r)) out.push_back(t.file + "\n" + to_csv(t));
    return out;
}

}  // namespace

TEST(Presets, AllEightExistAndValidate)
{
    const std::vector<std::string> expected{"fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig2c", "fig2d"};
    for (const auto& name : expected) {
        EXPECT_NE(std::find(preset_names().begin(), preset_names().end(), name), preset_names().end()) << name;
        EXPECT_NO_THROW(validate_scenario(preset_config(name))) << name;
    }
    EXPECT_THROW(preset_config("fig3"), ConfigError);
}

TEST(Presets, EncodeFigureParameters)
{
    const ScenarioConfig c1 = preset_config("fig1c");
    ASSERT_TRUE(c1.sweep.has_value());
    EXPECT_EQ(c1.sweep->parameter, "alpha");
    EXPECT_EQ(c1.sweep->values, (std::vector<double>{2, 4, 6, 8}));
    EXPECT_DOUBLE_EQ(c1.gamma_nonlinear, c1.gamma_linear / 5.0);
    EXPECT_EQ(c1.dim, 130);

    const ScenarioConfig a = preset_config("fig1a");
    EXPECT_EQ(a.sweep->values, (std::vector<double>{2, 3, 4, 5}));
    EXPECT_EQ(a.gadget.kind, GadgetSpec::Kind::Projector);
    EXPECT_EQ(a.gadget.k, 2);
    EXPECT_EQ(a.gadget.target.n, 2);

    const ScenarioConfig c2 = preset_config("fig2a");
    EXPECT_EQ(c2.sweep->series_parameter, "epsilon");
    EXPECT_EQ(c2.sweep->series_values, (std::vector<double>{1, 5, 10}));
    EXPECT_DOUBLE_EQ(c2.sweep->values.back(), 150.0);

    const ScenarioConfig d = preset_config("fig2d");
    EXPECT_EQ(d.omega, 0.0);
    EXPECT_EQ(d.gadget.function()(3), 8.0);
    EXPECT_EQ(d.sweep->parameter, "nbar");
    EXPECT_GT(d.sweep->values.front(), 0.0);
    EXPECT_LE(d.sweep->values.back(), 10.0);
}

TEST(Presets, TextParsesToConfig)
{
    for (const auto& name : preset_names()) {
        EXPECT_EQ(parse_config(preset_text(name)).echo(), preset_config(name).echo()) << name;
    }
}

TEST(RunSweep, SingleValueEqualsSingleRun)
{
    ScenarioConfig c = parse_config(kSteady, {"sweep.values=3"});
    const ScenarioResult r = run_sweep(c);
    ASSERT_EQ(r.points.size(), 1u);
    const PointResult p = run_point(with_parameter(c, "alpha0", 3.0));
    ASSERT_TRUE(r.points[0].ok && p.ok);
    EXPECT_EQ(r.points[0].steady->mandel_q, p.steady->mandel_q);
    EXPECT_EQ(r.points[0].approximate->mandel_q, p.approximate->mandel_q);
}

TEST(RunSweep, IndependentOfWorkerCount)
{
    const ScenarioConfig c = parse_config(kSteady);
    RunOptions one, many;
    one.workers = 1;
    many.workers = 3;
    const ScenarioResult a = run_sweep(c, one);
    const ScenarioResult b = run_sweep(c, many);
    EXPECT_EQ(csv_texts(a), csv_texts(b));
    ASSERT_EQ(b.points.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(b.points[i].sweep_value, c.sweep->values[i]);
}

TEST(RunSweep, SteadyComparisonReports)
{
    const ScenarioResult r = run_sweep(parse_config(kSteady));
    ASSERT_TRUE(r.all_ok());
    EXPECT_TRUE(r.all_converged());
    for (const auto& p : r.points) {
        ASSERT_TRUE(p.steady && p.approximate && p.recurrence);
        // The approximate equation's diagonal is the recurrence.
        EXPECT_NEAR(p.approximate->mandel_q, p.recurrence->mandel_q, 1e-7);
        EXPECT_TRUE(p.steady->converged);
    }
}

TEST(RunSweep, FailuresAreIsolatedPerPoint)
{
    // alpha0 = 1000 puts the peak near 16 photons; dim 12 cannot hold it.
    const ScenarioResult r = run_sweep(parse_config(kRecurrence, {"system.dim=12"}));
    ASSERT_EQ(r.points.size(), 3u);
    EXPECT_TRUE(r.points[0].ok);
    EXPECT_FALSE(r.points[2].ok);
    EXPECT_EQ(r.points[2].error_class, 2);
    EXPECT_NE(r.points[2].error.find("alpha0=1000"), std::string::npos);
    EXPECT_FALSE(r.all_ok());
}

TEST(RunSweep, RecurrenceModeMatchesLibrary)
{
    const ScenarioResult r = run_sweep(parse_config(kRecurrence));
    ASSERT_TRUE(r.all_ok());
    const NonlinearFunction f = NonlinearFunction::preset("x-1");
    for (const auto& p : r.points) {
        ASSERT_TRUE(p.steady.has_value());
        EXPECT_EQ(p.steady->method, "recurrence:ncl");
        EXPECT_DOUBLE_EQ(p.steady->mandel_q, ncl_recurrence(f, p.sweep_value, 0.0, 80, ncl_blocking_index(f, 0.0, 80)).mandel_q());
    }
}

TEST(RunSweep, PropagationSeries)
{
    const ScenarioResult r =
        run_sweep(preset_config("fig1c", {"solver.t_points=5", "solver.t_end=0.01", "solver.t_first=1e-4"}));
    ASSERT_TRUE(r.all_ok());
    ASSERT_EQ(r.points.size(), 4u);
    for (const auto& p : r.points) {
        ASSERT_EQ(p.series.size(), 6u);  // zero plus five log points
        EXPECT_EQ(p.series.front().time, 0.0);
        EXPECT_NEAR(p.series.front().mean_n, p.sweep_value * p.sweep_value, 1e-8);
        EXPECT_LE(p.diagnostics.max_trace_error, 1e-8);
        EXPECT_LE(p.diagnostics.max_top_population, 1e-6);
    }
}

TEST(RunPreset, EqualsRunSweepOfExpandedConfig)
{
    const ScenarioResult a = run_preset("fig2d");
    const ScenarioResult b = run_sweep(preset_config("fig2d"));
    EXPECT_EQ(a.provenance.preset, "fig2d");
    EXPECT_EQ(csv_texts(a), csv_texts(b));
}

TEST(RunPreset, ThermalRescueHasInteriorMinimum)
{
    const ScenarioResult r = run_preset("fig2d");
    ASSERT_TRUE(r.all_ok());
    std::vector<double> q;
    for (const auto& p : r.points) q.push_back(p.steady->mandel_q);
    const auto it = std::min_element(q.begin(), q.end());
    EXPECT_LT(*it, 0.0);
    EXPECT_NE(it, q.begin());
    EXPECT_NE(it, q.end() - 1);
}

TEST(RunPreset, ProvenanceIsFilled)
{
    const ScenarioResult r = run_preset("fig2d");
    EXPECT_FALSE(r.provenance.version.empty());
    EXPECT_NE(r.provenance.config_echo.find("[system]"), std::string::npos);
    EXPECT_FALSE(r.provenance.tolerances.empty());
}

TEST(Workers, EnvironmentVariable)
{
    ::setenv("NLDISS_WORKERS", "3", 1);
    EXPECT_EQ(default_workers(), 3);
    ::unsetenv("NLDISS_WORKERS");
    EXPECT_GE(default_workers(), 1);
}
