#include <cmath>

#include <gtest/gtest.h>

#include "nldiss/errors.hpp"
#include "nldiss/fock.hpp"
#include "nldiss/observables.hpp"
#include "support.hpp"

using namespace nldiss;

TEST(Annihilation, TwoLevelMatrix)
{
    const Matrix a = annihilation(2).matrix();
    EXPECT_EQ(a(0, 0), complex(0.0));
    EXPECT_EQ(a(0, 1), complex(1.0));
    EXPECT_EQ(a(1, 0), complex(0.0));
    EXPECT_EQ(a(1, 1), complex(0.0));
}

TEST(Annihilation, SqrtEntries)
{
    EXPECT_DOUBLE_EQ(annihilation(3)(1, 2).real(), std::sqrt(2.0));
}

TEST(Annihilation, NumberOperatorEigenvalue)
{
    const FockOperator n = creation(8) * annihilation(8);
    const Vector v = n.matrix() * fock_state(5, 8).amplitudes();
    EXPECT_LT((v - 5.0 * fock_state(5, 8).amplitudes()).norm(), 1e-14);
    EXPECT_LT(test::max_abs(n.matrix() - number_operator(8).matrix()), 1e-14);
}

TEST(Annihilation, CreationIsExactAdjoint)
{
    for (int d : {2, 5, 17}) {
        EXPECT_EQ(creation(d).matrix(), annihilation(d).matrix().adjoint());
    }
}

TEST(Annihilation, CanonicalCommutatorBelowCutoff)
{
    const int d = 12;
    const Matrix a = annihilation(d).matrix();
    const Matrix c = a * a.adjoint() - a.adjoint() * a;
    const Matrix block = c.topLeftCorner(d - 1, d - 1) - Matrix::Identity(d - 1, d - 1);
    EXPECT_LT(test::max_abs(block), 1e-12);
}

TEST(Annihilation, RejectsTinyDimension)
{
    EXPECT_THROW(annihilation(1), InvalidDimensionError);
}

TEST(FockState, UnitVectors)
{
    const StateVector s = fock_state(2, 5);
    EXPECT_EQ(s.dim(), 5);
    for (int n = 0; n < 5; ++n) EXPECT_EQ(s[n], complex(n == 2 ? 1.0 : 0.0));
    EXPECT_EQ(fock_state(0, 2)[0], complex(1.0));
    EXPECT_NEAR(std::abs(s.inner(s)), 1.0, 1e-15);
}

TEST(FockState, OutOfRange)
{
    EXPECT_THROW(fock_state(5, 5), OutOfRangeError);
    EXPECT_THROW(fock_state(-1, 5), OutOfRangeError);
}

TEST(StateVector, NormalizesInput)
{
    Vector v(3);
    v << 3.0, 4.0, 0.0;
    const StateVector s(v);
    EXPECT_NEAR(s.amplitudes().norm(), 1.0, 1e-12);
    EXPECT_NEAR(s[0].real(), 0.6, 1e-15);
}

TEST(CoherentState, VacuumAtZero)
{
    const StateVector s = coherent_state(0.0, 10);
    EXPECT_LT((s.amplitudes() - fock_state(0, 10).amplitudes()).norm(), 1e-15);
}

TEST(CoherentState, MeanAndMandelQ)
{
    const DensityMatrix rho = DensityMatrix::pure(coherent_state(2.0, 30));
    const DiagonalDistribution p = photon_distribution(rho);
    EXPECT_NEAR(p.mean(), 4.0, 1e-8);
    EXPECT_NEAR(mandel_q(rho), 0.0, 1e-8);
}

TEST(CoherentState, ApproximateEigenvector)
{
    const complex alpha(1.5, -0.7);
    const int d = minimal_coherent_dim(std::norm(alpha));
    const StateVector s = coherent_state(alpha, d);
    const Vector r = annihilation(d).matrix() * s.amplitudes() - alpha * s.amplitudes();
    EXPECT_LE(r.norm(), 1e-6);
}

TEST(CoherentState, GuardRejectsLeakage)
{
    EXPECT_THROW(coherent_state(5.0, 20), TruncationLeakageError);
    EXPECT_NO_THROW(coherent_state(5.0, 20, false));
}

TEST(PoissonTail, MatchesDirectSum)
{
    const double mean = 3.0;
    const int d = 6;
    double head = 0.0, term = std::exp(-mean);
    for (int n = 0; n < d; ++n) {
        head += term;
        term *= mean / (n + 1);
    }
    EXPECT_NEAR(poisson_tail_weight(mean, d), 1.0 - head, 1e-14);
    EXPECT_LT(poisson_tail_weight(mean, minimal_coherent_dim(mean, 1e-10)), 1e-10);
    EXPECT_GE(poisson_tail_weight(mean, minimal_coherent_dim(mean, 1e-10) - 1), 1e-10);
}

TEST(ThermalState, BoseEinsteinWeights)
{
    const double nbar = 0.5;
    const DensityMatrix rho = thermal_state(nbar, 40);
    const double ratio = nbar / (nbar + 1.0);
    for (int n = 1; n < 10; ++n) {
        EXPECT_NEAR(rho.matrix()(n, n).real() / rho.matrix()(n - 1, n - 1).real(), ratio, 1e-12);
    }
    EXPECT_THROW(thermal_state(5.0, 10), TruncationLeakageError);
}

TEST(DiagonalFunctionOperator, Presets)
{
    const Matrix lin = diagonal_function_operator(NonlinearFunction::preset("x-1"), 3).matrix();
    const Matrix sq = diagonal_function_operator(NonlinearFunction::preset("(x-1)^2"), 3).matrix();
    const double lin_expected[] = {-1.0, 0.0, 1.0};
    const double sq_expected[] = {1.0, 0.0, 1.0};
    for (int n = 0; n < 3; ++n) {
        EXPECT_EQ(lin(n, n).real(), lin_expected[n]);
        EXPECT_EQ(sq(n, n).real(), sq_expected[n]);
    }
    EXPECT_EQ(test::max_abs(lin - Matrix(lin.diagonal().asDiagonal())), 0.0);
}

TEST(DiagonalFunctionOperator, KillsJumpAtZeroOfF)
{
    const int d = 6;
    const Matrix A = annihilation(d).matrix() * diagonal_function_operator(NonlinearFunction::preset("x-1"), d).matrix();
    EXPECT_EQ((A * fock_state(1, d).amplitudes()).norm(), 0.0);
}

TEST(DiagonalFunctionOperator, CommutesWithNumber)
{
    const int d = 9;
    const Matrix f = diagonal_function_operator(NonlinearFunction::preset("(x-1)^3"), d).matrix();
    const Matrix n = number_operator(d).matrix();
    EXPECT_EQ(test::max_abs(f * n - n * f), 0.0);
}

TEST(NormalOrderNorm, ClosedFormCases)
{
    EXPECT_NEAR(normal_order_norm(fock_state(0, 10), 2), 2.0, 1e-14);
    EXPECT_NEAR(normal_order_norm(fock_state(1, 10), 1), 2.0, 1e-14);
    // |alpha|^4 + 4|alpha|^2 + 2 at alpha = 2
    EXPECT_NEAR(normal_order_norm(coherent_state(2.0, 40), 2), 34.0, 1e-8);
}

TEST(NormalOrderNorm, MatchesOperatorSandwich)
{
    const int d = 40;
    const StateVector y = coherent_state(complex(1.2, 0.8), d);
    const Matrix a = annihilation(d).matrix();
    const Vector lifted = a.adjoint() * (a.adjoint() * (a.adjoint() * y.amplitudes()));
    EXPECT_NEAR(normal_order_norm(y, 3), lifted.squaredNorm(), 1e-9);
}

TEST(NormalOrderNorm, GuardsTopAmplitudes)
{
    EXPECT_THROW(normal_order_norm(fock_state(8, 10), 2), TruncationLeakageError);
}

TEST(DensityMatrix, RejectsInvalidOperators)
{
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 0.5;
    EXPECT_THROW(DensityMatrix{FockOperator(m)}, CorruptedStateError);  // trace
    m(1, 1) = 0.5;
    m(0, 1) = 0.1;
    EXPECT_THROW(DensityMatrix{FockOperator(m)}, CorruptedStateError);  // hermiticity
    m(0, 1) = 0.0;
    m(0, 0) = 1.1;
    m(1, 1) = -0.1;
    EXPECT_THROW(DensityMatrix{FockOperator(m)}, CorruptedStateError);  // positivity
}

TEST(DensityMatrix, DiagnosticsOfValidStates)
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
        const DensityMatrix rho = test::random_density(6, rng);
        const DensityDiagnostics d = diagnose_density(rho.matrix());
        EXPECT_LE(d.trace_error, 1e-12);
        EXPECT_LE(d.hermiticity_error, 1e-15);
        EXPECT_GT(d.min_eigenvalue, 0.0);
    }
}

TEST(CoherentState, GuardDimIsTight)
{
    for (double r : {0.5, 2.0, 5.0, 8.0}) {
        const int d = minimal_coherent_dim(r * r);
        EXPECT_NO_THROW(coherent_state(r, d));
        EXPECT_THROW(coherent_state(r, d - 1), TruncationLeakageError);
    }
}
