#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nldiss/cli.hpp"
#include "nldiss/output.hpp"

namespace fs = std::filesystem;
using nldiss::cli::run;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path temp(const std::string& name)
{
    const fs::path p = fs::path(::testing::TempDir()) / name;
    fs::remove_all(p);
    return p;
}

fs::path write_file(const std::string& name, const std::string& text)
{
    const fs::path p = temp(name);
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kRecurrence = R"ini(
[system]
dim = 160
gamma_linear = 0
gamma_nonlinear = 1
alpha0 = 10000

[gadget]
kind = ncl
f = x-1

[solver]
mode = recurrence

[output]
name = asymptotic
)ini";

}  // namespace

TEST(Cli, UnknownSubcommand)
{
    const Outcome o = invoke({"frobnicate"});
    EXPECT_EQ(o.code, 1);
    EXPECT_NE(o.err.find("Usage"), std::string::npos);
}

TEST(Cli, NoArguments)
{
    EXPECT_EQ(invoke({}).code, 1);
}

TEST(Cli, UnknownFlag)
{
    EXPECT_EQ(invoke({"figure", "fig2d", "--bogus"}).code, 1);
}

TEST(Cli, HelpAndVersion)
{
    EXPECT_EQ(invoke({"--help"}).code, 0);
    const Outcome v = invoke({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("nldiss"), std::string::npos);
}

TEST(Cli, ValidateAcceptsEveryPreset)
{
    const Outcome list = invoke({"presets"});
    ASSERT_EQ(list.code, 0);
    std::istringstream names(list.out);
    int n = 0;
    for (std::string name; std::getline(names, name); ++n) {
        EXPECT_EQ(invoke({"validate", name}).code, 0) << name;
        const fs::path file = write_file(name + ".ini", invoke({"presets", name}).out);
        EXPECT_EQ(invoke({"validate", file.string()}).code, 0) << name;
    }
    EXPECT_EQ(n, 8);
}

TEST(Cli, ValidateNegativeRate)
{
    const fs::path file = write_file("negative.ini", std::string(kRecurrence) + "");
    std::string text = slurp(file);
    text.replace(text.find("gamma_nonlinear = 1"), 19, "gamma_nonlinear = -1");
    std::ofstream(file) << text;
    const Outcome o = invoke({"validate", file.string()});
    EXPECT_EQ(o.code, 1);
    EXPECT_NE(o.err.find("system.gamma_nonlinear"), std::string::npos);
}

TEST(Cli, MissingConfigFile)
{
    EXPECT_EQ(invoke({"steady", "/nonexistent/path.ini"}).code, 1);
}

TEST(Cli, RecurrenceEmitsAsymptoticQ)
{
    const fs::path file = write_file("asymptotic.ini", kRecurrence);
    const fs::path out = temp("asymptotic_out");
    const Outcome o = invoke({"recurrence", file.string(), "-q", "--out", out.string()});
    ASSERT_EQ(o.code, 0) << o.err;
    const nldiss::Table t = nldiss::parse_csv(o.out);
    ASSERT_EQ(t.columns, nldiss::steady_columns);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_NEAR(t.rows[0][1], -0.8, 0.05);
    EXPECT_TRUE(fs::exists(out / "provenance.json"));
}

TEST(Cli, FigureWritesFidelityCsv)
{
    const fs::path out = temp("fig1a_out");
    const Outcome o = invoke({"figure", "fig1a", "--out", out.string(), "--no-svg", "-q", "--override",
                              "solver.t_points=5", "-s", "solver.t_end=0.02"});
    ASSERT_EQ(o.code, 0) << o.err;
    const std::string csv = slurp(out / "fig1a_fidelity.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t_Gamma,alpha,fidelity");
    EXPECT_FALSE(fs::exists(out / "fig1a_fidelity.svg"));
    const std::string ts = slurp(out / "fig1a_timeseries.csv");
    EXPECT_EQ(ts.rfind("time,sweep_value,mean_n,variance_n,mandel_q,fidelity,purity,trace_error\n0,2,", 0), 0u);
}

TEST(Cli, BadOverride)
{
    EXPECT_EQ(invoke({"figure", "fig2d", "-q", "-s", "system.nope=1"}).code, 1);
    EXPECT_EQ(invoke({"figure", "fig2d", "-q", "-s", "garbage"}).code, 1);
}

TEST(Cli, NumericalFailureExitsTwo)
{
    const fs::path file = write_file("small.ini", kRecurrence);
    const Outcome o = invoke({"recurrence", file.string(), "-q", "--out", temp("small_out").string(), "-s", "system.dim=20"});
    EXPECT_EQ(o.code, 2);
}

TEST(Cli, UnconvergedExitsThree)
{
    const fs::path file = write_file("slow.ini", R"ini(
[system]
dim = 70
gamma_linear = 0.2
gamma_nonlinear = 1
alpha0 = 5

[gadget]
kind = ncl
f = x-1

[solver]
mode = steady
method = evolve
t_max = 0.01
)ini");
    const Outcome o = invoke({"steady", file.string(), "-q", "--out", temp("slow_out").string()});
    EXPECT_EQ(o.code, 3) << o.err;
}

TEST(Cli, DeterministicOutputs)
{
    const fs::path a = temp("det_cli_a"), b = temp("det_cli_b");
    ASSERT_EQ(invoke({"figure", "fig2d", "-q", "-o", a.string(), "-j", "1"}).code, 0);
    ASSERT_EQ(invoke({"figure", "fig2d", "-q", "-o", b.string(), "-j", "2"}).code, 0);
    for (const char* f : {"fig2d_steady.csv", "fig2d_mandel_q.csv", "fig2d_mandel_q.svg"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}
