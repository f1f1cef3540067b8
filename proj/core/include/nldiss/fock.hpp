#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nldiss/nonlinear_function.hpp"

namespace nldiss {

using complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Dense operator on the truncated Fock space {|0>, ..., |dim-1>}.
/// Row/column index is the photon number, ascending.
class FockOperator {
public:
    explicit FockOperator(Matrix elements);

    static FockOperator zero(int dim);
    static FockOperator identity(int dim);

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    complex operator()(int row, int col) const { return m_(row, col); }

    FockOperator adjoint() const { return FockOperator(m_.adjoint()); }

    FockOperator operator*(const FockOperator& rhs) const;
    FockOperator operator+(const FockOperator& rhs) const;
    FockOperator operator-(const FockOperator& rhs) const;
    FockOperator operator*(complex s) const { return FockOperator(m_ * s); }

private:
    Matrix m_;
};

inline FockOperator operator*(complex s, const FockOperator& op) { return op * s; }

/// Unit-norm ket. The constructor normalizes its input.
class StateVector {
public:
    explicit StateVector(Vector amplitudes);

    int dim() const noexcept { return static_cast<int>(v_.size()); }
    const Vector& amplitudes() const noexcept { return v_; }
    complex operator[](int n) const { return v_(n); }

    /// <this|other>
    complex inner(const StateVector& other) const;

    /// |this><this|
    FockOperator projector() const;

private:
    Vector v_;
};

struct DensityDiagnostics {
    double trace_error = 0.0;        // |Tr rho - 1|
    double hermiticity_error = 0.0;  // max |rho - rho^dag|
    double min_eigenvalue = 0.0;     // of the Hermitian part
};

struct DensityTolerances {
    double hermiticity = 1e-10;
    double trace = 1e-8;
    double min_eigenvalue = -1e-8;
};

DensityDiagnostics diagnose_density(const Matrix& rho);

/// Hermitian, unit-trace, positive semidefinite operator (to tolerance).
class DensityMatrix {
public:
    /// Validates against the default tolerances; throws CorruptedStateError.
    explicit DensityMatrix(FockOperator op);

    /// Validates using diagnostics the caller already computed for `rho`.
    static DensityMatrix from_diagnosed(Matrix rho, const DensityDiagnostics& diag);

    static DensityMatrix pure(const StateVector& psi);
    static DensityMatrix from_distribution(std::span<const double> probabilities);
    static DensityMatrix maximally_mixed(int dim);

    int dim() const noexcept { return op_.dim(); }
    const FockOperator& op() const noexcept { return op_; }
    const Matrix& matrix() const noexcept { return op_.matrix(); }

private:
    struct Trusted {};
    DensityMatrix(FockOperator op, Trusted) : op_(std::move(op)) {}

    FockOperator op_;
};

FockOperator annihilation(int dim);
FockOperator creation(int dim);
FockOperator number_operator(int dim);

FockOperator diagonal_function_operator(const NonlinearFunction& f, int dim);

StateVector fock_state(int n, int dim);

/// Weight of an untruncated Poisson(mean) distribution on {dim, dim+1, ...}.
double poisson_tail_weight(double mean, int dim);

/// Smallest dimension whose discarded Poisson tail is below `threshold`.
int minimal_coherent_dim(double mean, double threshold = 1e-10);

/// Truncated coherent state, renormalized. With `guard` set, throws
/// TruncationLeakageError when the discarded tail exceeds 1e-10.
StateVector coherent_state(complex alpha, int dim, bool guard = true);

/// Diagonal thermal (Bose-Einstein) state with mean `nbar`, renormalized after
/// truncation. Same 1e-10 guard on the discarded geometric tail.
DensityMatrix thermal_state(double nbar, int dim, bool guard = true);

/// N = <y| a^k (a^dag)^k |y> = ||(a^dag)^k |y>||^2 by explicit operator
/// application. With `guard` set, the top-k amplitudes of y must be below
/// 1e-10 or TruncationLeakageError is thrown.
double normal_order_norm(const StateVector& y, int k, bool guard = true);

/// (a^dag)^k |y>, unnormalized.
Vector apply_creation_power(const Vector& y, int k);

}  // namespace nldiss
