#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "nldiss/errors.hpp"
#include "nldiss/output.hpp"
#include "nldiss/scenarios.hpp"

using namespace nldiss;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::path(::testing::TempDir()) / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(FormatNumber, SeventeenDigitsAndSpecials)
{
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(NAN), "nan");
    EXPECT_EQ(format_number(INFINITY), "inf");
    EXPECT_EQ(format_number(-INFINITY), "-inf");
}

TEST(Csv, ExactHeaders)
{
    EXPECT_EQ(to_csv({"", timeseries_columns, {}}), "time,sweep_value,mean_n,variance_n,mandel_q,fidelity,purity,trace_error\n");
    EXPECT_EQ(to_csv({"", distribution_columns, {}}), "sweep_value,n,p_n\n");
    EXPECT_EQ(to_csv({"", steady_columns, {}}), "sweep_value,mandel_q,mean_n,purity,converged\n");
}

TEST(Csv, RoundTripFullPrecision)
{
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    Table t{"x.csv", {"a", "b", "c"}, {}};
    for (int i = 0; i < 50; ++i) t.rows.push_back({u(rng), std::exp(u(rng) / 10.0), u(rng) * 1e-300});
    t.rows.push_back({NAN, 0.0, -0.0});
    const Table back = parse_csv(to_csv(t));
    EXPECT_EQ(back.columns, t.columns);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) EXPECT_EQ(back.rows[i], t.rows[i]);
    EXPECT_TRUE(std::isnan(back.rows.back()[0]));
}

TEST(Csv, MalformedInput)
{
    EXPECT_THROW(parse_csv("a,b\n1\n"), ConfigError);
    EXPECT_THROW(parse_csv("a,b\n1,x\n"), ConfigError);
}

TEST(Svg, LinesBarsAndMarker)
{
    Plot lines{Plot::Kind::Lines, "l.svg", "title", "Γt", "Q", false, {}, {}, std::make_pair(0.5, -0.2)};
    for (int s = 0; s < 4; ++s) lines.series.push_back({"α=" + std::to_string(s), {0, 0.5, 1}, {0.0, -0.2 * s, 0.1}});
    const std::string svg = to_svg(lines);
    EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
    EXPECT_EQ(count(svg, "<polyline"), 4u);
    EXPECT_EQ(count(svg, "<circle"), 1u);
    EXPECT_NE(svg.find("Γt"), std::string::npos);

    Plot bars{Plot::Kind::Bars, "b.svg", "", "n", "p_n", false, {}, {}, {}};
    bars.series.push_back({"a", {0, 1, 2}, {0.2, 0.5, 0.3}});
    bars.series.push_back({"b", {0, 1, 2}, {0.1, 0.8, 0.1}});
    EXPECT_GE(count(to_svg(bars), "<rect"), 6u);
}

TEST(Bundle, SteadyPresetFiles)
{
    ScenarioResult r = run_preset("fig2d");
    const fs::path dir = fresh_dir("bundle_fig2d");
    const auto files = write_bundle(r, dir.string());
    for (const char* f : {"fig2d_steady.csv", "fig2d_mandel_q.csv", "fig2d_mandel_q.svg", "provenance.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_EQ(slurp(dir / "fig2d_steady.csv").substr(0, 45), "sweep_value,mandel_q,mean_n,purity,converged\n");
    const std::string prov = slurp(dir / "provenance.json");
    for (const auto& f : files) {
        if (fs::path(f).filename() == "provenance.json") continue;
        EXPECT_NE(prov.find(fs::path(f).filename().string()), std::string::npos) << f;
    }
    // Single Q(nbar) curve with its minimum marked.
    const std::string svg = slurp(dir / "fig2d_mandel_q.svg");
    EXPECT_GE(count(svg, "<polyline"), 1u);
    EXPECT_EQ(count(svg, "<circle"), 1u);
}

TEST(Bundle, DeterministicBytes)
{
    ScenarioResult a = run_preset("fig2d");
    ScenarioResult b = run_preset("fig2d");
    const fs::path da = fresh_dir("det_a"), db = fresh_dir("det_b");
    write_bundle(a, da.string(), false);
    write_bundle(b, db.string(), false);
    for (const auto& e : fs::directory_iterator(da)) {
        if (e.path().filename() == "provenance.json") continue;  // carries timings
        EXPECT_EQ(slurp(e.path()), slurp(db / e.path().filename())) << e.path();
    }
}

TEST(Bundle, DistributionsAreNormalized)
{
    ScenarioResult r = run_preset("fig1d", {"solver.t_points=4", "solver.t_end=0.02", "solver.t_first=1e-4"});
    ASSERT_TRUE(r.all_ok());
    for (const auto& t : result_tables(r)) {
        if (t.columns != distribution_columns) continue;
        std::map<double, double> sums;
        for (const auto& row : t.rows) sums[row[0]] += row[2];
        ASSERT_FALSE(sums.empty());
        for (const auto& [value, sum] : sums) EXPECT_NEAR(sum, 1.0, 1e-10) << t.file << " " << value;
    }
}

TEST(Bundle, FigureOneCurves)
{
    ScenarioResult r = run_preset("fig1a", {"solver.t_points=6", "solver.t_end=0.05"});
    ASSERT_TRUE(r.all_ok());
    const fs::path dir = fresh_dir("bundle_fig1a");
    write_bundle(r, dir.string());
    const Table t = parse_csv(slurp(dir / "fig1a_fidelity.csv"));
    EXPECT_EQ(t.columns, (std::vector<std::string>{"t_Gamma", "alpha", "fidelity"}));
    EXPECT_EQ(t.rows.size(), 4u * 6u);
    EXPECT_EQ(count(slurp(dir / "fig1a_fidelity.svg"), "<polyline"), 4u);

    ScenarioResult rb = run_preset("fig1b", {"solver.t_points=6", "solver.t_end=0.05"});
    const fs::path dir_b = fresh_dir("bundle_fig1b");
    write_bundle(rb, dir_b.string());
    EXPECT_TRUE(fs::exists(dir_b / "fig1b_distribution.csv"));
    EXPECT_GE(count(slurp(dir_b / "fig1b_distribution.svg"), "<rect"), 4u);
}

TEST(Bundle, UnwritableDirectory)
{
    ScenarioResult r = run_preset("fig2d");
    const fs::path blocker = fresh_dir("blocker");
    std::ofstream(blocker.string()) << "file";
    EXPECT_THROW(write_bundle(r, (blocker / "sub").string()), IoError);
}
