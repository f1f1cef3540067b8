#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "nldiss/fock.hpp"

namespace nldiss {

using SparseMatrix = Eigen::SparseMatrix<complex, Eigen::ColMajor>;

// Rate convention used throughout: a channel (r, x) contributes
//     r * (2 x rho x^dag - x^dag x rho - rho x^dag x),
// i.e. the dissipator carries a factor 2 and no 1/2. Pure loss at rate r
// therefore empties |1> as exp(-2 r t).

struct LindbladChannel {
    double rate = 0.0;
    FockOperator op;
    std::string label;
};

/// drho/dt = -i[H, rho] + Gamma(nbar+1) L(a) + Gamma nbar L(a^dag) + gamma L(A)
/// with H = i Omega (a - a^dag).
class MasterEquation {
public:
    /// Builds the three canonical channels from (Gamma, gamma, nbar) and the
    /// engineered operator A.
    MasterEquation(int dim, double gamma_linear, double gamma_nonlinear, double nbar, double omega,
                   FockOperator engineered);

    int dim() const noexcept { return dim_; }
    const FockOperator& hamiltonian() const noexcept { return hamiltonian_; }
    const std::vector<LindbladChannel>& channels() const noexcept { return channels_; }
    const FockOperator& engineered() const noexcept { return channels_[2].op; }

    double gamma_linear() const noexcept { return gamma_linear_; }
    double gamma_nonlinear() const noexcept { return gamma_nonlinear_; }
    double nbar() const noexcept { return nbar_; }
    double omega() const noexcept { return omega_; }

    /// Gamma / gamma (infinite when gamma = 0).
    double epsilon() const;
    /// Omega / gamma, the scaled driving amplitude.
    double alpha0() const;

private:
    int dim_;
    double gamma_linear_;
    double gamma_nonlinear_;
    double nbar_;
    double omega_;
    FockOperator hamiltonian_;
    std::vector<LindbladChannel> channels_;
};

/// 2 x rho x^dag - x^dag x rho - rho x^dag x
FockOperator dissipator(const FockOperator& x, const DensityMatrix& rho);

namespace detail {

/// Operator stored as S + U V^dag + D, with each part optional. Products with
/// dense matrices cost O(nnz(S) D + r D^2 + [D present] D^3).
class OperatorRep {
public:
    OperatorRep() = default;
    explicit OperatorRep(int dim) : dim_(dim) {}

    /// Adds `m` after classifying it as sparse, low-rank or dense.
    void add(const Matrix& m);

    Matrix left(const Matrix& x) const;   // op * x
    Matrix right(const Matrix& x) const;  // x * op
    Vector diagonal() const;
    Matrix to_dense() const;
    OperatorRep adjoint() const;
    bool empty() const;

private:
    int dim_ = 0;
    SparseMatrix sparse_;
    Matrix u_, v_;
    Matrix dense_;
    bool has_sparse_ = false;
    bool has_dense_ = false;
};

}  // namespace detail

/// Linear map rho -> K rho + rho K^dag + sum_j w_j L_j rho R_j.
///
/// Both the Lindblad right-hand side (K = -iH - sum r x^dag x, terms
/// (2r, x, x^dag)) and the truncated approximate equation fit this form.
/// Propagation uses it matrix-free; superoperator() materializes it for
/// null-space solves.
class Generator {
public:
    struct Sandwich {
        double weight;
        Matrix left;
        Matrix right;
    };

    /// K is given as a sum of parts so that structure (sparse, low rank) of
    /// each part is kept.
    Generator(std::vector<Matrix> effective_parts, std::vector<Sandwich> sandwiches);

    int dim() const noexcept { return dim_; }

    Matrix apply(const Matrix& rho) const;

    /// diag(K); the part of the map that acts as a Hadamard scaling
    /// (d_n + conj(d_m)) rho_nm.
    const Vector& effective_diagonal() const noexcept { return diag_; }

    /// apply(rho) minus the Hadamard part.
    Matrix apply_off_diagonal(const Matrix& rho) const;

    /// Column-stacking vectorization: superoperator() * vec(rho) = vec(apply(rho)),
    /// with vec(rho)[i + j*D] = rho(i, j).
    SparseMatrix superoperator() const;

    /// K, the sum of the effective parts.
    const Matrix& effective() const noexcept { return effective_; }
    const std::vector<Sandwich>& sandwiches() const noexcept { return sandwiches_; }

    /// Largest absolute entry scale, used for relative thresholds.
    double scale() const noexcept { return scale_; }

private:
    int dim_;
    Matrix effective_;
    std::vector<Sandwich> sandwiches_;
    detail::OperatorRep k_;
    detail::OperatorRep k_adj_;
    std::vector<std::pair<detail::OperatorRep, detail::OperatorRep>> reps_;
    Vector diag_;
    double scale_ = 0.0;
};

Generator make_generator(const MasterEquation& me);

/// -i[H, rho] + sum over channels of rate * dissipator.
FockOperator rhs(const MasterEquation& me, const DensityMatrix& rho);
FockOperator rhs(const MasterEquation& me, const FockOperator& rho);

/// Dense D^2 x D^2 superoperator (column stacking). Throws DimensionCapError
/// when dim exceeds `max_dim`; use the long-time integrator in that case.
Matrix superoperator_matrix(const MasterEquation& me, int max_dim = 64);

}  // namespace nldiss
