#include <cmath>

#include <gtest/gtest.h>

#include "nldiss/errors.hpp"
#include "nldiss/gadgets.hpp"
#include "nldiss/observables.hpp"
#include "nldiss/steady.hpp"
#include "support.hpp"

using namespace nldiss;

namespace {

const NonlinearFunction x_minus_1 = NonlinearFunction::preset("x-1");

MasterEquation ncl(int dim, double alpha0, double epsilon, const NonlinearFunction& f = x_minus_1)
{
    return ncl_master_equation(dim, epsilon, 1.0, 0.0, alpha0, f);
}

DiagonalDistribution diag_of(const DensityMatrix& rho) { return photon_distribution(rho); }

}  // namespace

TEST(Nullspace, PureLossVacuum)
{
    const DensityMatrix rho = steady_state_nullspace(ncl_master_equation(10, 1.0, 0.0, 0.0, 0.0, x_minus_1));
    EXPECT_LT(trace_distance(rho, DensityMatrix::pure(fock_state(0, 10))), 1e-12);
}

TEST(Nullspace, ThermalDetailedBalance)
{
    const int d = 40;
    const double nbar = 1.3;
    const DensityMatrix rho = steady_state_nullspace(ncl_master_equation(d, 0.5, 0.0, nbar, 0.0, x_minus_1));
    EXPECT_LT(trace_distance(rho, thermal_state(nbar, d, false)), 1e-10);
}

TEST(Nullspace, ResidualAndValidity)
{
    const MasterEquation me = ncl(40, 5.0, 0.2);
    const DensityMatrix rho = steady_state_nullspace(me);
    EXPECT_LE(rhs(me, rho).matrix().norm(), 1e-10);
    EXPECT_GE(diagnose_density(rho.matrix()).min_eigenvalue, -1e-8);
}

TEST(Nullspace, MandelQMatchesEvolution)
{
    const MasterEquation me = ncl(40, 5.0, 0.2);
    const double q_exact = mandel_q(steady_state_nullspace(me));
    const SteadyResult r = evolve_to_steady(me, DensityMatrix::pure(fock_state(0, 40)));
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(mandel_q(r.state), q_exact, 1e-6);
}

TEST(Nullspace, DegenerateNullSpace)
{
    // Without linear loss and drive, |0> and |1> are both dark for a(a^dag a - 1).
    EXPECT_THROW(steady_state_nullspace(ncl_master_equation(6, 0.0, 1.0, 0.0, 0.0, x_minus_1)), NonUniqueSteadyStateError);
}

TEST(Nullspace, CapDefersToEvolution)
{
    EXPECT_THROW(steady_state_nullspace(ncl(65, 5.0, 0.2)), DimensionCapError);
    NullspaceOptions opt;
    opt.max_dim = 10;
    EXPECT_THROW(steady_state_nullspace(ncl(12, 1.0, 0.2), opt), DimensionCapError);
}

TEST(Nullspace, StiffThermalChainIsUnique)
{
    // Rates of (x-1)^3 span ten decades at this size.
    const NonlinearFunction f = NonlinearFunction::preset("(x-1)^3");
    const DensityMatrix rho = steady_state_nullspace(ncl_master_equation(48, 1.0, 0.2, 0.25, 0.0, f));
    const DiagonalDistribution rec = thermal_recurrence(f, 0.25, 0.2, 48);
    for (int n = 0; n < 48; ++n) EXPECT_NEAR(rho.matrix()(n, n).real(), rec[n], 1e-8);
}

TEST(NclRecurrence, ConstantFunctionIsPoisson)
{
    const double alpha0 = 3.0;
    const DiagonalDistribution p = ncl_recurrence(NonlinearFunction::constant(1.0), alpha0, 0.0, 60);
    const DiagonalDistribution ref = DiagonalDistribution::poisson(alpha0 * alpha0, 60);
    for (int n = 0; n < 60; ++n) EXPECT_NEAR(p[n], ref[n], 1e-13);
    EXPECT_NEAR(p.mandel_q(), 0.0, 1e-10);
}

TEST(NclRecurrence, AsymptoticMandelQ)
{
    const int start = ncl_blocking_index(x_minus_1, 0.0, 200);
    EXPECT_EQ(start, 1);
    const DiagonalDistribution p = ncl_recurrence(x_minus_1, 1e4, 0.0, 200, start + 1);
    EXPECT_NEAR(p.mandel_q(), -0.8, 0.05);
}

TEST(NclRecurrence, BlockedAtZeroOfF)
{
    try {
        ncl_recurrence(x_minus_1, 10.0, 0.0, 100);
        FAIL() << "expected a blocked recurrence";
    } catch (const BlockedRecurrenceError& e) {
        EXPECT_EQ(e.index(), 1);
    }
    EXPECT_NO_THROW(ncl_recurrence(x_minus_1, 10.0, 0.2, 100));
}

TEST(NclRecurrence, TailGuard)
{
    EXPECT_THROW(ncl_recurrence(x_minus_1, 1e4, 0.0, 45, 2), TailGuardError);
}

TEST(NclRecurrence, LogDomainSurvivesLargeDrive)
{
    const DiagonalDistribution p = ncl_recurrence(NonlinearFunction::preset("x^k", 1), 1e6, 0.0, 400);
    double sum = 0.0;
    for (double v : p.probabilities()) {
        EXPECT_TRUE(std::isfinite(v));
        sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(NclRecurrence, MatchesFullSolverAtAlpha150)
{
    // With eps = 0.2 the double commutator is small near the peak; the full
    // steady state and the recurrence agree in shape, not exactly.
    const int d = 64;
    const double eps = 0.2, alpha0 = 150.0;
    const DiagonalDistribution exact = diag_of(steady_state_nullspace(ncl(d, alpha0, eps)));
    const DiagonalDistribution rec = ncl_recurrence(x_minus_1, alpha0, eps, d);
    double tv = 0.0;
    for (int n = 0; n < d; ++n) tv += 0.5 * std::abs(exact[n] - rec[n]);
    EXPECT_LT(tv, 0.1);
    EXPECT_NEAR(exact.mean(), rec.mean(), 0.1 * rec.mean());
}

TEST(ThermalRecurrence, BoseEinsteinWithoutNonlinearity)
{
    const double nbar = 2.0;
    const DiagonalDistribution p = thermal_recurrence(NonlinearFunction::constant(0.0), nbar, 0.2, 200);
    EXPECT_NEAR(p.mandel_q(), nbar, 1e-10);
    EXPECT_NEAR(p.mean(), nbar, 1e-10);
}

TEST(ThermalRecurrence, EffectiveTruncation)
{
    const NonlinearFunction f = NonlinearFunction::preset("(x-1)^3");
    const double nbar = 5.0, ratio = 0.2;
    const DiagonalDistribution p = thermal_recurrence(f, nbar, ratio, 48);
    // n_t: first n where (gamma/Gamma) f(n) reaches nbar + 1.
    int nt = 2;
    while (ratio * f(nt) < nbar + 1.0) ++nt;
    double beyond = 0.0;
    for (int n = nt + 2; n < 48; ++n) beyond += p[n];
    EXPECT_LT(beyond, 1e-3);
    EXPECT_GT(p[nt - 1], 1e-3);
}

TEST(ThermalRecurrence, InteriorMinimumOfQ)
{
    const NonlinearFunction f = NonlinearFunction::preset("(x-1)^3");
    std::vector<double> q;
    for (int i = 1; i <= 40; ++i) q.push_back(thermal_recurrence(f, 0.25 * i, 0.2, 48).mandel_q());
    const auto it = std::min_element(q.begin(), q.end());
    EXPECT_LT(*it, 0.0);
    EXPECT_NE(it, q.begin());
    EXPECT_NE(it, q.end() - 1);
}

TEST(ThermalRecurrence, EqualsNullspaceWithoutDrive)
{
    const NonlinearFunction f = NonlinearFunction::preset("(x-1)^3");
    for (double nbar : {0.5, 2.0, 6.0}) {
        const DensityMatrix rho = steady_state_nullspace(ncl_master_equation(40, 1.0, 0.2, nbar, 0.0, f));
        const DiagonalDistribution rec = thermal_recurrence(f, nbar, 0.2, 40);
        EXPECT_LT(test::max_abs(rho.matrix() - Matrix(rho.matrix().diagonal().asDiagonal())), 1e-12);
        for (int n = 0; n < 40; ++n) EXPECT_NEAR(rho.matrix()(n, n).real(), rec[n], 1e-8);
    }
}

TEST(PeakCondition, PowerLawOfPeak)
{
    const double alpha0 = 1e4;
    const PeakEstimate pk = peak_condition(x_minus_1, alpha0, 0.0, 200);
    EXPECT_NEAR(pk.n0, std::pow(alpha0, 0.4), 2.0);
}

TEST(PeakCondition, MonomialEstimate)
{
    for (int k : {1, 2, 3}) {
        const PeakEstimate pk = peak_condition(NonlinearFunction::preset("x^k", k), 1e6, 0.0, 2000);
        EXPECT_NEAR(pk.q_estimate, -4.0 * k / (4.0 * k + 1.0), 1e-12);
    }
}

TEST(PeakCondition, ApproachesMinusPointEight)
{
    double previous = 0.0;
    for (double alpha0 : {1e2, 1e3, 1e4, 1e5}) {
        const PeakEstimate pk = peak_condition(x_minus_1, alpha0, 0.0, 400);
        EXPECT_LT(std::abs(pk.q_estimate + 0.8), std::abs(previous + 0.8) + 1e-15);
        previous = pk.q_estimate;
    }
    EXPECT_NEAR(previous, -0.8, 0.01);
}

TEST(PeakCondition, TieBreaksTowardSmallerN)
{
    // n f(n)^4 is 16 at n = 1 and 2 at n = 2, both 7 away from alpha0^2 = 9.
    EXPECT_EQ(peak_condition(NonlinearFunction::tabulated({0.0, 2.0, 1.0, 10.0, 10.0}), 3.0, 0.0, 5).n0, 1);
}

TEST(PeakCondition, WindowTooSmall)
{
    EXPECT_THROW(peak_condition(x_minus_1, 1e6, 0.0, 20), WindowTooSmallError);
}

TEST(PeakCondition, EstimateAndRecurrenceConverge)
{
    std::vector<double> gaps;
    for (double alpha0 : {1e3, 1e4, 1e5, 1e6}) {
        const int d = 400;
        const PeakEstimate pk = peak_condition(x_minus_1, alpha0, 0.0, d);
        const double q = ncl_recurrence(x_minus_1, alpha0, 0.0, d, 2).mandel_q();
        gaps.push_back(std::abs(pk.q_estimate - q));
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) EXPECT_LT(gaps[i], gaps[i - 1]);
}

TEST(PeakCondition, NonclassicalForFastDecayingRatios)
{
    for (const char* name : {"x-1", "(x-1)^2", "(x-1)^3"}) {
        const NonlinearFunction f = NonlinearFunction::preset(name);
        const DiagonalDistribution p = ncl_recurrence(f, 100.0, 0.0, 200, 2);
        EXPECT_LT(p.mandel_q(), 0.0) << name;
    }
}

TEST(GaussianProfile, TrivialCases)
{
    EXPECT_DOUBLE_EQ(gaussian_profile(x_minus_1, 40, 0.0, 0), 1.0);
    for (int dn : {1, 2, 5}) {
        EXPECT_DOUBLE_EQ(gaussian_profile(x_minus_1, 40, 0.3, dn), gaussian_profile(x_minus_1, 40, 0.3, -dn));
    }
}

TEST(GaussianProfile, AgainstRecurrenceNearPeak)
{
    // Drive centring the discrete distribution on n0 = 40, p_39 = p_41:
    // alpha0^2 = sqrt(v(40) v(41)) with v(n) = n f(n)^4.
    const double alpha0 = std::pow(40.0 * std::pow(39.0, 4) * 41.0 * std::pow(40.0, 4), 0.25);
    ASSERT_EQ(peak_condition(x_minus_1, alpha0, 0.0, 200).n0, 40);
    const DiagonalDistribution p = ncl_recurrence(x_minus_1, alpha0, 0.0, 200, 2);
    ASSERT_NEAR(p[39] / p[41], 1.0, 1e-12);
    for (int dn : {-3, 3}) {
        const double exact = p[40 + dn] / p[40];
        EXPECT_NEAR(gaussian_profile(x_minus_1, 40, 0.0, dn) / exact, 1.0, 0.25) << dn;
    }
}

TEST(ApproximateRhs, DoubleCommutatorIdentity)
{
    std::mt19937_64 rng(29);
    const int d = 8;
    for (const char* name : {"x-1", "(x-1)^2"}) {
        const NonlinearFunction f = NonlinearFunction::preset(name);
        const MasterEquation me = ncl_master_equation(d, 0.4, 1.7, 0.0, 2.3, f);
        for (int i = 0; i < 10; ++i) {
            const DensityMatrix rho = test::random_density(d, rng);
            const Matrix full = rhs(me, rho).matrix();
            const Matrix approx = approximate_rhs(me, f, rho).matrix();
            const Matrix dc = double_commutator_term(f, rho.op()).matrix();
            EXPECT_LE(test::max_abs(full - (approx - 1.7 * dc)), 1e-10);
        }
    }
}

TEST(ApproximateRhs, RequiresZeroNbar)
{
    const MasterEquation me = ncl_master_equation(6, 0.4, 1.0, 0.5, 1.0, x_minus_1);
    EXPECT_THROW(approximate_generator(me, x_minus_1), ConfigError);
}

TEST(ApproximateSteadyState, DiagonalIsRecurrence)
{
    const int d = 40;
    const double alpha0 = 5.0, eps = 0.2;
    const MasterEquation me = ncl(d, alpha0, eps);
    const SteadyResult r = approximate_steady_state(me, x_minus_1);
    ASSERT_TRUE(r.converged);
    const DiagonalDistribution rec = ncl_recurrence(x_minus_1, alpha0, eps, d);
    for (int n = 0; n < d; ++n) EXPECT_NEAR(r.state.matrix()(n, n).real(), rec[n], 1e-8);
}

// With H = i Omega (a - a^dag) the approximate equation is stationary for
// B rho = c rho, rho B^dag = conj(c) rho when gamma c = -Omega, so c = -alpha0.
TEST(ApproximateSteadyState, EigenstateOfB)
{
    const int d = 40;
    const double alpha0 = 5.0, eps = 0.2;
    const SteadyResult r = approximate_steady_state(ncl(d, alpha0, eps), x_minus_1);
    const Matrix f = diagonal_function_operator(x_minus_1, d).matrix();
    const Matrix B = annihilation(d).matrix() * (f * f + eps * Matrix::Identity(d, d));
    const Matrix res = B * r.state.matrix() + alpha0 * r.state.matrix();
    EXPECT_LT(res.norm(), 1e-6 * alpha0);
    EXPECT_NEAR(purity(r.state), 1.0, 1e-8);
}
