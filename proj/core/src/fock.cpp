#include "nldiss/fock.hpp"

#include <cmath>
#include <string>

#include "nldiss/errors.hpp"
#include "format.hpp"

namespace nldiss {

namespace {

constexpr double kLeakageThreshold = 1e-10;

void require_dim(int dim)
{
    if (dim < 2) {
        throw InvalidDimensionError("Fock dimension must be at least 2, got " + std::to_string(dim));
    }
}

void require_same_dim(int a, int b, const char* what)
{
    if (a != b) {
        throw DimensionMismatchError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                     " vs " + std::to_string(b) + ")");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// FockOperator

FockOperator::FockOperator(Matrix elements) : m_(std::move(elements))
{
    if (m_.rows() != m_.cols()) {
        throw InvalidDimensionError("Fock operator must be square");
    }
    require_dim(static_cast<int>(m_.rows()));
}

FockOperator FockOperator::zero(int dim)
{
    require_dim(dim);
    return FockOperator(Matrix::Zero(dim, dim));
}

FockOperator FockOperator::identity(int dim)
{
    require_dim(dim);
    return FockOperator(Matrix::Identity(dim, dim));
}

FockOperator FockOperator::operator*(const FockOperator& rhs) const
{
    require_same_dim(dim(), rhs.dim(), "operator product");
    return FockOperator(m_ * rhs.m_);
}

FockOperator FockOperator::operator+(const FockOperator& rhs) const
{
    require_same_dim(dim(), rhs.dim(), "operator sum");
    return FockOperator(m_ + rhs.m_);
}

FockOperator FockOperator::operator-(const FockOperator& rhs) const
{
    require_same_dim(dim(), rhs.dim(), "operator difference");
    return FockOperator(m_ - rhs.m_);
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(Vector amplitudes) : v_(std::move(amplitudes))
{
    require_dim(static_cast<int>(v_.size()));
    const double norm = v_.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw CorruptedStateError("state vector has zero or non-finite norm");
    }
    v_ /= norm;
}

complex StateVector::inner(const StateVector& other) const
{
    require_same_dim(dim(), other.dim(), "inner product");
    return v_.dot(other.v_);  // conjugates the left operand
}

FockOperator StateVector::projector() const
{
    return FockOperator(v_ * v_.adjoint());
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityDiagnostics diagnose_density(const Matrix& rho)
{
    DensityDiagnostics d;
    d.trace_error = std::abs(rho.trace() - complex(1.0, 0.0));
    d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

namespace {

void check_diagnostics(const DensityDiagnostics& d)
{
    const DensityTolerances tol;
    if (!(d.hermiticity_error <= tol.hermiticity)) {
        throw CorruptedStateError("density matrix not Hermitian: max|rho - rho^dag| = " +
                                  detail::num(d.hermiticity_error));
    }
    if (!(d.trace_error <= tol.trace)) {
        throw CorruptedStateError("density matrix trace error " + detail::num(d.trace_error));
    }
    if (!(d.min_eigenvalue >= tol.min_eigenvalue)) {
        throw CorruptedStateError("density matrix not positive: min eigenvalue " +
                                  detail::num(d.min_eigenvalue));
    }
}

}  // namespace

DensityMatrix::DensityMatrix(FockOperator op) : op_(std::move(op))
{
    check_diagnostics(diagnose_density(op_.matrix()));
}

DensityMatrix DensityMatrix::from_diagnosed(Matrix rho, const DensityDiagnostics& diag)
{
    check_diagnostics(diag);
    return DensityMatrix(FockOperator(std::move(rho)), Trusted{});
}

DensityMatrix DensityMatrix::pure(const StateVector& psi)
{
    return DensityMatrix(psi.projector(), Trusted{});
}

DensityMatrix DensityMatrix::from_distribution(std::span<const double> probabilities)
{
    const int dim = static_cast<int>(probabilities.size());
    require_dim(dim);
    Matrix rho = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) {
        rho(n, n) = probabilities[static_cast<std::size_t>(n)];
    }
    return DensityMatrix(FockOperator(std::move(rho)));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim)
{
    require_dim(dim);
    return DensityMatrix(FockOperator(Matrix::Identity(dim, dim) / static_cast<double>(dim)), Trusted{});
}

// ---------------------------------------------------------------------------
// Canonical operators and states

FockOperator annihilation(int dim)
{
    require_dim(dim);
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return FockOperator(std::move(a));
}

FockOperator creation(int dim)
{
    return annihilation(dim).adjoint();
}

FockOperator number_operator(int dim)
{
    require_dim(dim);
    Matrix n = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
        n(k, k) = static_cast<double>(k);
    }
    return FockOperator(std::move(n));
}

FockOperator diagonal_function_operator(const NonlinearFunction& f, int dim)
{
    require_dim(dim);
    Matrix d = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) {
        const double v = f.value(n);
        if (!std::isfinite(v)) {
            throw ConfigError("nonlinear function is not finite at n=" + std::to_string(n));
        }
        d(n, n) = v;
    }
    return FockOperator(std::move(d));
}

StateVector fock_state(int n, int dim)
{
    require_dim(dim);
    if (n < 0 || n >= dim) {
        throw OutOfRangeError("Fock state |" + std::to_string(n) + "> outside dimension " + std::to_string(dim));
    }
    Vector v = Vector::Zero(dim);
    v(n) = 1.0;
    return StateVector(std::move(v));
}

double poisson_tail_weight(double mean, int dim)
{
    if (mean <= 0.0) return 0.0;
    const double log_mean = std::log(mean);
    auto log_pmf = [&](int n) { return -mean + n * log_mean - std::lgamma(n + 1.0); };
    if (static_cast<double>(dim) > mean) {
        // Terms decrease monotonically past the mode; sum until negligible.
        double tail = 0.0;
        for (int n = dim;; ++n) {
            const double term = std::exp(log_pmf(n));
            tail += term;
            if (term <= 1e-18 * tail || term == 0.0) break;
        }
        return tail;
    }
    double head = 0.0;
    for (int n = 0; n < dim; ++n) {
        head += std::exp(log_pmf(n));
    }
    return std::max(0.0, 1.0 - head);
}

int minimal_coherent_dim(double mean, double threshold)
{
    int dim = 2;
    while (poisson_tail_weight(mean, dim) >= threshold) {
        ++dim;
    }
    return dim;
}

StateVector coherent_state(complex alpha, int dim, bool guard)
{
    require_dim(dim);
    const double r = std::abs(alpha);
    if (r == 0.0) {
        return fock_state(0, dim);
    }
    const double mean = r * r;
    if (guard && poisson_tail_weight(mean, dim) >= kLeakageThreshold) {
        const int need = minimal_coherent_dim(mean, kLeakageThreshold);
        throw TruncationLeakageError("coherent state |alpha|=" + detail::num(r) + " leaks " +
                                         detail::num(poisson_tail_weight(mean, dim)) + " past dim " +
                                         std::to_string(dim) + "; minimal acceptable dim is " + std::to_string(need),
                                     need);
    }
    const double phase = std::arg(alpha);
    const double log_r = std::log(r);
    Vector v(dim);
    for (int n = 0; n < dim; ++n) {
        const double log_mag = -0.5 * mean + n * log_r - 0.5 * std::lgamma(n + 1.0);
        v(n) = std::polar(std::exp(log_mag), n * phase);
    }
    return StateVector(std::move(v));
}

DensityMatrix thermal_state(double nbar, int dim, bool guard)
{
    require_dim(dim);
    if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
        throw ConfigError("thermal state needs a finite nbar >= 0");
    }
    std::vector<double> p(static_cast<std::size_t>(dim), 0.0);
    if (nbar == 0.0) {
        p[0] = 1.0;
        return DensityMatrix::from_distribution(p);
    }
    const double ratio = nbar / (nbar + 1.0);
    const double tail = std::pow(ratio, dim);  // P(n >= dim) of the geometric law
    if (guard && tail >= kLeakageThreshold) {
        const int need = static_cast<int>(std::ceil(std::log(kLeakageThreshold) / std::log(ratio)));
        throw TruncationLeakageError("thermal state nbar=" + detail::num(nbar) + " leaks " +
                                         detail::num(tail) + " past dim " + std::to_string(dim) +
                                         "; minimal acceptable dim is " + std::to_string(need),
                                     need);
    }
    double sum = 0.0;
    double w = 1.0;
    for (int n = 0; n < dim; ++n) {
        p[static_cast<std::size_t>(n)] = w;
        sum += w;
        w *= ratio;
    }
    for (double& x : p) x /= sum;
    return DensityMatrix::from_distribution(p);
}

Vector apply_creation_power(const Vector& y, int k)
{
    Vector out = y;
    const int dim = static_cast<int>(y.size());
    for (int step = 0; step < k; ++step) {
        Vector next = Vector::Zero(dim);
        for (int n = 0; n + 1 < dim; ++n) {
            next(n + 1) = std::sqrt(static_cast<double>(n + 1)) * out(n);
        }
        out = std::move(next);
    }
    return out;
}

double normal_order_norm(const StateVector& y, int k, bool guard)
{
    if (k < 1) {
        throw ConfigError("normal_order_norm needs k >= 1");
    }
    const int dim = y.dim();
    if (k >= dim) {
        throw InvalidDimensionError("normal_order_norm: k must be smaller than the dimension");
    }
    if (guard) {
        for (int n = dim - k; n < dim; ++n) {
            if (std::abs(y[n]) >= kLeakageThreshold) {
                throw TruncationLeakageError("(a^dag)^" + std::to_string(k) + "|y> spills past the cutoff: |y_" +
                                             std::to_string(n) + "| = " + detail::num(std::abs(y[n])));
            }
        }
    }
    return apply_creation_power(y.amplitudes(), k).squaredNorm();
}

}  // namespace nldiss
