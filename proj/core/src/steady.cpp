#include "nldiss/steady.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "nldiss/errors.hpp"
#include "nldiss/gadgets.hpp"
#include "format.hpp"

namespace nldiss {

namespace {

constexpr double kTailGuard = 1e-12;

void require_dim(int dim)
{
    if (dim < 2) {
        throw InvalidDimensionError("dimension must be at least 2, got " + std::to_string(dim));
    }
}

// Normalizes exp(log_p) without overflow and applies the tail guard.
DiagonalDistribution from_log_weights(const std::vector<double>& log_p, const char* what)
{
    const double top = *std::max_element(log_p.begin(), log_p.end());
    std::vector<double> p(log_p.size());
    double sum = 0.0;
    for (std::size_t n = 0; n < log_p.size(); ++n) {
        p[n] = std::exp(log_p[n] - top);
        sum += p[n];
    }
    const double tail = p.back() / sum;
    if (!(tail < kTailGuard)) {
        throw TailGuardError(std::string(what) + ": p_{dim-1} = " + detail::num(tail) +
                             " is not below 1e-12; increase dim (currently " + std::to_string(log_p.size()) + ")");
    }
    return DiagonalDistribution(std::move(p));
}

double stiffness_factor(const NonlinearFunction& f, int n0, double epsilon)
{
    const double fv = f.value(n0);
    const double denom = fv * fv + epsilon;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 + 4.0 * n0 * f.derivative(n0) * fv / denom;
}

using Triplet = Eigen::Triplet<complex>;

}  // namespace

// ---------------------------------------------------------------------------
// Null space

DensityMatrix steady_state_nullspace(const MasterEquation& me, const NullspaceOptions& options)
{
    if (me.dim() > options.max_dim) {
        throw DimensionCapError("null-space solve limited to dim <= " + std::to_string(options.max_dim) +
                                " (got " + std::to_string(me.dim()) + "); use evolve_to_steady");
    }
    return steady_state_nullspace(make_generator(me), options);
}

DensityMatrix steady_state_nullspace(const Generator& gen, const NullspaceOptions& options)
{
    const int d = gen.dim();
    if (d > options.max_dim) {
        throw DimensionCapError("null-space solve limited to dim <= " + std::to_string(options.max_dim) +
                                " (got " + std::to_string(d) + "); use evolve_to_steady");
    }
    const SparseMatrix s = gen.superoperator();
    const Eigen::Index n = s.rows();

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(s.nonZeros() + d));
    for (Eigen::Index k = 0; k < s.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
            if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
        }
    }
    // Row 0 becomes Tr rho = sum_i rho_ii = sum_i vec[i + i d].
    for (int i = 0; i < d; ++i) trip.emplace_back(0, i + i * d, complex(1.0, 0.0));

    // Rows are equilibrated to unit max-norm for the factorization. Rates of
    // high Fock levels can exceed the small ones by ten orders of magnitude
    // (f = (x-1)^3). The uniqueness test below still runs on the unscaled
    // matrix, whose conditioning the scaling would otherwise distort.
    std::vector<double> row_max(static_cast<std::size_t>(n), 0.0);
    for (const auto& t : trip) {
        auto& r = row_max[static_cast<std::size_t>(t.row())];
        r = std::max(r, std::abs(t.value()));
    }
    for (auto& t : trip) {
        const double r = row_max[static_cast<std::size_t>(t.row())];
        if (r > 0.0) t = Triplet(t.row(), t.col(), t.value() / r);
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) {
        throw NonUniqueSteadyStateError("bordered Liouvillian is singular: the steady state is not unique");
    }

    // sigma_min of the unscaled matrix R M by inverse iteration on
    // ((R M)^dag (R M))^{-1} = M^{-1} R^{-1} R^{-1} M^{-dag}.
    Vector inv_r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = row_max[static_cast<std::size_t>(i)];
        inv_r(i) = r > 0.0 ? 1.0 / r : 0.0;
    }
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = complex(1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i)), 0.3 * std::cos(1.3 * static_cast<double>(i)));
    }
    v.normalize();
    double growth = 0.0;
    for (int it = 0; it < 40; ++it) {
        const Vector w = lu.adjoint().solve(v);
        const Vector z = lu.solve(inv_r.cwiseProduct(inv_r.cwiseProduct(w)).eval());
        const double g = z.norm();
        if (!std::isfinite(g)) {
            growth = std::numeric_limits<double>::infinity();
            break;
        }
        v = z / g;
        if (it > 3 && std::abs(g - growth) <= 1e-3 * g) {
            growth = g;
            break;
        }
        growth = g;
    }
    const double sigma_min = 1.0 / std::sqrt(growth);
    if (!(sigma_min >= options.uniqueness_tol)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "steady state is not unique: smallest singular value %.3g of the trace-bordered "
                      "Liouvillian is below %.3g",
                      sigma_min, options.uniqueness_tol);
        throw NonUniqueSteadyStateError(msg);
    }

    Vector b = Vector::Zero(n);
    b(0) = 1.0 / row_max[0];
    Vector x = lu.solve(b);
    for (int refine = 0; refine < 2; ++refine) {
        const Vector r = b - m * x;
        x += lu.solve(r);
    }

    Matrix rho = Eigen::Map<const Matrix>(x.data(), d, d);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    const double residual = gen.apply(rho).norm();
    if (!(residual <= options.residual_tol)) {
        char msg[120];
        std::snprintf(msg, sizeof msg, "null-space steady state residual %.3g exceeds %.3g", residual,
                      options.residual_tol);
        throw NumericalError(msg);
    }
    return DensityMatrix::from_diagnosed(rho, diagnose_density(rho));
}

// ---------------------------------------------------------------------------
// Recurrences

DiagonalDistribution ncl_recurrence(const NonlinearFunction& f, double alpha0, double epsilon, int dim, int start)
{
    require_dim(dim);
    if (!(alpha0 >= 0.0) || !std::isfinite(alpha0)) {
        throw ConfigError("ncl_recurrence: alpha0 must be finite and >= 0");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("ncl_recurrence: epsilon must be finite and >= 0");
    }
    if (start < 0 || start >= dim) {
        throw OutOfRangeError("ncl_recurrence: start index " + std::to_string(start) + " outside [0, dim)");
    }
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> log_p(static_cast<std::size_t>(dim), ninf);
    log_p[static_cast<std::size_t>(start)] = 0.0;
    if (alpha0 > 0.0) {
        const double log_a2 = 2.0 * std::log(alpha0);
        for (int n = start + 1; n < dim; ++n) {
            const double fn = f.value(n);
            const double den = fn * fn + epsilon;
            if (den == 0.0) {
                throw BlockedRecurrenceError("ncl_recurrence: f(" + std::to_string(n) + ")^2 + eps = 0 blocks the "
                                             "recurrence; use eps > 0 or start >= " + std::to_string(n),
                                             n);
            }
            log_p[static_cast<std::size_t>(n)] =
                log_p[static_cast<std::size_t>(n - 1)] + log_a2 - std::log(static_cast<double>(n)) - 2.0 * std::log(den);
        }
    }
    return from_log_weights(log_p, "ncl_recurrence");
}

int ncl_blocking_index(const NonlinearFunction& f, double epsilon, int dim)
{
    require_dim(dim);
    int last = 0;
    for (int n = 1; n < dim; ++n) {
        const double fn = f.value(n);
        if (fn * fn + epsilon == 0.0) last = n;
    }
    return last;
}

DiagonalDistribution thermal_recurrence(const NonlinearFunction& f, double nbar, double loss_ratio, int dim)
{
    require_dim(dim);
    if (!(nbar > 0.0) || !std::isfinite(nbar)) {
        throw ConfigError("thermal_recurrence: nbar must be finite and > 0");
    }
    if (!(loss_ratio >= 0.0) || !std::isfinite(loss_ratio)) {
        throw ConfigError("thermal_recurrence: gamma/Gamma must be finite and >= 0");
    }
    std::vector<double> log_p(static_cast<std::size_t>(dim), 0.0);
    const double log_nbar = std::log(nbar);
    for (int n = 1; n < dim; ++n) {
        const double fn = f.value(n);
        log_p[static_cast<std::size_t>(n)] =
            log_p[static_cast<std::size_t>(n - 1)] + log_nbar - std::log((nbar + 1.0) + loss_ratio * fn * fn);
    }
    return from_log_weights(log_p, "thermal_recurrence");
}

// ---------------------------------------------------------------------------
// Analytic estimates

PeakEstimate peak_condition(const NonlinearFunction& f, double alpha0, double epsilon, int dim)
{
    require_dim(dim);
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) {
        throw ConfigError("peak_condition: alpha0 must be finite and > 0");
    }
    const double target = alpha0 * alpha0;
    int best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int n = 0; n < dim; ++n) {
        const double fn = f.value(n);
        const double s = fn * fn + epsilon;
        const double gap = std::abs(n * s * s - target);
        if (gap < best_gap) {
            best_gap = gap;
            best = n;
        }
    }
    if (best == dim - 1) {
        throw WindowTooSmallError("peak_condition: n0 lands on the last level " + std::to_string(dim - 1) +
                                  "; increase dim");
    }
    PeakEstimate est;
    est.n0 = best;
    if (best == 0) {
        est.variance = 0.0;
        est.q_estimate = std::numeric_limits<double>::quiet_NaN();
        return est;
    }
    est.variance = best / stiffness_factor(f, best, epsilon);
    est.q_estimate = est.variance / best - 1.0;
    return est;
}

double gaussian_profile(const NonlinearFunction& f, int n0, double epsilon, int delta_n)
{
    if (n0 < 1) {
        throw OutOfRangeError("gaussian_profile needs n0 >= 1");
    }
    const double ad = std::abs(static_cast<double>(delta_n));
    return std::exp(-ad * (ad + 1.0) / (2.0 * n0) * stiffness_factor(f, n0, epsilon));
}

// ---------------------------------------------------------------------------
// Approximate equation

Generator approximate_generator(const MasterEquation& me, const NonlinearFunction& f)
{
    const int d = me.dim();
    if (me.nbar() != 0.0) {
        throw ConfigError("approximate equation is defined for nbar = 0 only");
    }
    if (!(me.gamma_nonlinear() > 0.0)) {
        throw ConfigError("approximate equation needs gamma_nonlinear > 0");
    }
    const FockOperator expected = ncl_lindblad(f, d);
    const double mismatch = (expected.matrix() - me.engineered().matrix()).cwiseAbs().maxCoeff();
    if (mismatch > 1e-12 * (1.0 + expected.matrix().cwiseAbs().maxCoeff())) {
        throw ConfigError("approximate equation: engineered operator is not a f(a^dag a) for " + f.describe());
    }
    const double gamma = me.gamma_nonlinear();
    const double eps = me.epsilon();
    const Matrix a = annihilation(d).matrix();
    const Matrix ff = diagonal_function_operator(f, d).matrix();
    const Matrix b = a * (ff * ff + eps * Matrix::Identity(d, d));

    std::vector<Matrix> k{complex(0.0, -1.0) * me.hamiltonian().matrix(), -gamma * (a.adjoint() * b)};
    std::vector<Generator::Sandwich> terms{{gamma, a, b.adjoint()}, {gamma, b, a.adjoint()}};
    return Generator(std::move(k), std::move(terms));
}

FockOperator approximate_rhs(const MasterEquation& me, const NonlinearFunction& f, const FockOperator& rho)
{
    if (rho.dim() != me.dim()) {
        throw DimensionMismatchError("approximate_rhs: dimension mismatch");
    }
    return FockOperator(approximate_generator(me, f).apply(rho.matrix()));
}

FockOperator approximate_rhs(const MasterEquation& me, const NonlinearFunction& f, const DensityMatrix& rho)
{
    return approximate_rhs(me, f, rho.op());
}

FockOperator double_commutator_term(const NonlinearFunction& f, const FockOperator& rho)
{
    const int d = rho.dim();
    const Matrix a = annihilation(d).matrix();
    const Matrix ff = diagonal_function_operator(f, d).matrix();
    const Matrix& r = rho.matrix();
    const Matrix inner = r * ff * ff - 2.0 * ff * r * ff + ff * ff * r;
    return FockOperator(a * inner * a.adjoint());
}

namespace {

SteadyResult solve_generator(const Generator& gen, const NullspaceOptions& nullspace, const SteadyOptions& evolve)
{
    if (gen.dim() <= nullspace.max_dim) {
        DensityMatrix rho = steady_state_nullspace(gen, nullspace);
        const double residual = gen.apply(rho.matrix()).norm();
        return SteadyResult{std::move(rho), true, 0.0, residual, "nullspace", {}};
    }
    return evolve_to_steady(gen, DensityMatrix::pure(fock_state(0, gen.dim())), evolve);
}

}  // namespace

SteadyResult approximate_steady_state(const MasterEquation& me, const NonlinearFunction& f,
                                      const NullspaceOptions& nullspace, const SteadyOptions& evolve)
{
    return solve_generator(approximate_generator(me, f), nullspace, evolve);
}

SteadyResult steady_state(const MasterEquation& me, const NullspaceOptions& nullspace, const SteadyOptions& evolve)
{
    return solve_generator(make_generator(me), nullspace, evolve);
}

}  // namespace nldiss
