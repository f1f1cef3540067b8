#include "nldiss/liouvillian.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "nldiss/errors.hpp"

namespace nldiss {

namespace {

constexpr double kHermiticityTol = 1e-10;
constexpr double kSparseFraction = 0.2;

void require_match(int a, int b, const char* what)
{
    if (a != b) {
        throw DimensionMismatchError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                     " vs " + std::to_string(b) + ")");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// MasterEquation

MasterEquation::MasterEquation(int dim, double gamma_linear, double gamma_nonlinear, double nbar,
                               double omega, FockOperator engineered)
    : dim_(dim),
      gamma_linear_(gamma_linear),
      gamma_nonlinear_(gamma_nonlinear),
      nbar_(nbar),
      omega_(omega),
      hamiltonian_(FockOperator::zero(dim))
{
    if (!(gamma_linear >= 0.0) || !std::isfinite(gamma_linear)) {
        throw ConfigError("gamma_linear must be finite and >= 0");
    }
    if (!(gamma_nonlinear >= 0.0) || !std::isfinite(gamma_nonlinear)) {
        throw ConfigError("gamma_nonlinear must be finite and >= 0");
    }
    if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
        throw ConfigError("nbar must be finite and >= 0");
    }
    if (!std::isfinite(omega)) {
        throw ConfigError("omega must be finite");
    }
    require_match(engineered.dim(), dim, "engineered operator");

    const FockOperator a = annihilation(dim);
    const FockOperator ad = creation(dim);
    hamiltonian_ = FockOperator(complex(0.0, omega) * (a.matrix() - ad.matrix()));
    const double herm = (hamiltonian_.matrix() - hamiltonian_.matrix().adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermiticityTol) {
        throw NumericalError("Hamiltonian is not Hermitian");
    }

    channels_.push_back({gamma_linear * (nbar + 1.0), a, "loss"});
    channels_.push_back({gamma_linear * nbar, ad, "thermal_pump"});
    channels_.push_back({gamma_nonlinear, std::move(engineered), "engineered"});
}

double MasterEquation::epsilon() const
{
    if (gamma_nonlinear_ == 0.0) return std::numeric_limits<double>::infinity();
    return gamma_linear_ / gamma_nonlinear_;
}

double MasterEquation::alpha0() const
{
    if (gamma_nonlinear_ == 0.0) {
        return omega_ == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), omega_);
    }
    return omega_ / gamma_nonlinear_;
}

FockOperator dissipator(const FockOperator& x, const DensityMatrix& rho)
{
    require_match(x.dim(), rho.dim(), "dissipator");
    const Matrix& r = rho.matrix();
    const Matrix& m = x.matrix();
    const Matrix xdx = m.adjoint() * m;
    return FockOperator(2.0 * m * r * m.adjoint() - xdx * r - r * xdx);
}

// ---------------------------------------------------------------------------
// OperatorRep

namespace detail {

void OperatorRep::add(const Matrix& m)
{
    const int d = static_cast<int>(m.rows());
    if (dim_ == 0) dim_ = d;
    const Eigen::Index nnz = (m.array() != complex(0.0, 0.0)).count();
    if (nnz == 0) return;

    if (static_cast<double>(nnz) <= kSparseFraction * d * d) {
        SparseMatrix s = m.sparseView();
        if (has_sparse_) {
            sparse_ += s;
        } else {
            sparse_ = std::move(s);
            has_sparse_ = true;
        }
        return;
    }

    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv(0) * 1e-15 * d;
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    if (rank <= d / 8) {
        const Matrix u = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal();
        const Matrix v = svd.matrixV().leftCols(rank);
        Matrix nu(d, u_.cols() + rank), nv(d, v_.cols() + rank);
        if (u_.cols() > 0) {
            nu << u_, u;
            nv << v_, v;
        } else {
            nu = u;
            nv = v;
        }
        u_ = std::move(nu);
        v_ = std::move(nv);
        return;
    }

    if (has_dense_) {
        dense_ += m;
    } else {
        dense_ = m;
        has_dense_ = true;
    }
}

Matrix OperatorRep::left(const Matrix& x) const
{
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    if (has_sparse_) out.noalias() += sparse_ * x;
    if (u_.cols() > 0) out.noalias() += u_ * (v_.adjoint() * x);
    if (has_dense_) out.noalias() += dense_ * x;
    return out;
}

Matrix OperatorRep::right(const Matrix& x) const
{
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    if (has_sparse_) out.noalias() += x * sparse_;
    if (u_.cols() > 0) out.noalias() += (x * u_) * v_.adjoint();
    if (has_dense_) out.noalias() += x * dense_;
    return out;
}

Vector OperatorRep::diagonal() const
{
    Vector d = Vector::Zero(dim_);
    if (has_sparse_) d += sparse_.diagonal();
    if (u_.cols() > 0) d += u_.cwiseProduct(v_.conjugate()).rowwise().sum();
    if (has_dense_) d += dense_.diagonal();
    return d;
}

Matrix OperatorRep::to_dense() const
{
    Matrix m = Matrix::Zero(dim_, dim_);
    if (has_sparse_) m += Matrix(sparse_);
    if (u_.cols() > 0) m += u_ * v_.adjoint();
    if (has_dense_) m += dense_;
    return m;
}

OperatorRep OperatorRep::adjoint() const
{
    OperatorRep r(dim_);
    if (has_sparse_) {
        r.sparse_ = sparse_.adjoint();
        r.has_sparse_ = true;
    }
    r.u_ = v_;
    r.v_ = u_;
    if (has_dense_) {
        r.dense_ = dense_.adjoint();
        r.has_dense_ = true;
    }
    return r;
}

bool OperatorRep::empty() const
{
    return !has_sparse_ && !has_dense_ && u_.cols() == 0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(std::vector<Matrix> effective_parts, std::vector<Sandwich> sandwiches)
    : dim_(effective_parts.empty() ? 0 : static_cast<int>(effective_parts.front().rows())),
      sandwiches_(std::move(sandwiches)),
      k_(dim_)
{
    if (dim_ < 2) {
        throw InvalidDimensionError("generator needs an effective operator of dimension >= 2");
    }
    effective_ = Matrix::Zero(dim_, dim_);
    for (const auto& part : effective_parts) {
        if (part.rows() != dim_ || part.cols() != dim_) {
            throw DimensionMismatchError("generator: effective operator parts differ in dimension");
        }
        effective_ += part;
        k_.add(part);
    }
    k_adj_ = k_.adjoint();
    diag_ = k_.diagonal();
    scale_ = effective_.cwiseAbs().maxCoeff();
    for (const auto& s : sandwiches_) {
        require_match(static_cast<int>(s.left.rows()), dim_, "generator term");
        require_match(static_cast<int>(s.right.rows()), dim_, "generator term");
        detail::OperatorRep l(dim_), r(dim_);
        l.add(s.left);
        r.add(s.right);
        reps_.emplace_back(std::move(l), std::move(r));
        scale_ = std::max(scale_, std::abs(s.weight) * s.left.cwiseAbs().maxCoeff() *
                                      s.right.cwiseAbs().maxCoeff());
    }
}

Matrix Generator::apply(const Matrix& rho) const
{
    Matrix out = k_.left(rho);
    out += k_adj_.right(rho);
    for (std::size_t j = 0; j < reps_.size(); ++j) {
        out += sandwiches_[j].weight * reps_[j].second.right(reps_[j].first.left(rho));
    }
    return out;
}

Matrix Generator::apply_off_diagonal(const Matrix& rho) const
{
    Matrix out = apply(rho);
    for (int m = 0; m < dim_; ++m) {
        const complex dm = std::conj(diag_(m));
        for (int n = 0; n < dim_; ++n) {
            out(n, m) -= (diag_(n) + dm) * rho(n, m);
        }
    }
    return out;
}

namespace {

using Triplet = Eigen::Triplet<complex>;

// Adds weight * (R^T kron L) to the triplet list: vec(L X R) = (R^T (x) L) vec(X).
void push_kron(std::vector<Triplet>& out, complex weight, const SparseMatrix& l, const SparseMatrix& r, int dim)
{
    for (int k = 0; k < r.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator ir(r, k); ir; ++ir) {
            // R(lr, kc): contributes to output column kc from input column lr.
            const int lr = static_cast<int>(ir.row());
            const int kc = static_cast<int>(ir.col());
            const complex rv = ir.value();
            for (int j = 0; j < l.outerSize(); ++j) {
                for (SparseMatrix::InnerIterator il(l, j); il; ++il) {
                    const int i = static_cast<int>(il.row());
                    out.emplace_back(i + kc * dim, j + lr * dim, weight * il.value() * rv);
                }
            }
        }
    }
}

}  // namespace

SparseMatrix Generator::superoperator() const
{
    const int d = dim_;
    const SparseMatrix id = Matrix::Identity(d, d).sparseView();
    const SparseMatrix k = effective_.sparseView();
    const SparseMatrix kd = Matrix(effective_.adjoint()).sparseView();
    std::vector<Triplet> trip;
    push_kron(trip, 1.0, k, id, d);
    push_kron(trip, 1.0, id, kd, d);
    for (const auto& s : sandwiches_) {
        push_kron(trip, s.weight, s.left.sparseView(), s.right.sparseView(), d);
    }
    SparseMatrix out(d * d, d * d);
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

Generator make_generator(const MasterEquation& me)
{
    std::vector<Matrix> k{complex(0.0, -1.0) * me.hamiltonian().matrix()};
    std::vector<Generator::Sandwich> terms;
    for (const auto& ch : me.channels()) {
        if (ch.rate == 0.0) continue;
        const Matrix& x = ch.op.matrix();
        k.push_back(-ch.rate * (x.adjoint() * x));
        terms.push_back({2.0 * ch.rate, x, x.adjoint()});
    }
    return Generator(std::move(k), std::move(terms));
}

FockOperator rhs(const MasterEquation& me, const FockOperator& rho)
{
    require_match(rho.dim(), me.dim(), "rhs");
    return FockOperator(make_generator(me).apply(rho.matrix()));
}

FockOperator rhs(const MasterEquation& me, const DensityMatrix& rho)
{
    return rhs(me, rho.op());
}

Matrix superoperator_matrix(const MasterEquation& me, int max_dim)
{
    if (me.dim() > max_dim) {
        throw DimensionCapError("superoperator of dimension " + std::to_string(me.dim()) +
                                " exceeds the cap " + std::to_string(max_dim) +
                                "; use evolve_to_steady for this size");
    }
    return Matrix(make_generator(me).superoperator());
}

}  // namespace nldiss
