#include "nldiss/evolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include "nldiss/errors.hpp"
#include "nldiss/gadgets.hpp"
#include "format.hpp"

namespace nldiss {

namespace {

// Dormand-Prince 5(4), Hairer & Wanner's DOPRI5 tableau. Row 6 is the
// propagating solution (FSAL), `e` the difference to the embedded 4th order.
constexpr int kStages = 7;
constexpr std::array<double, kStages> kC{0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
constexpr double kA[kStages][kStages] = {
    {0, 0, 0, 0, 0, 0, 0},
    {1.0 / 5.0, 0, 0, 0, 0, 0, 0},
    {3.0 / 40.0, 9.0 / 40.0, 0, 0, 0, 0, 0},
    {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0, 0, 0, 0},
    {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0, 0, 0},
    {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0, 0},
    {35.0 / 384.0, 0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0},
};
constexpr std::array<double, kStages> kE{71.0 / 57600.0,    0.0,          -71.0 / 16695.0, 71.0 / 1920.0,
                                         -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0};

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

void hermitize(Matrix& x)
{
    x = 0.5 * (x + x.adjoint()).eval();
}

double top_population(const Matrix& u)
{
    const auto last = u.rows() - 1;
    return u(last, last).real();
}

// Advances rho under a Generator. Keeps the FSAL stage so that the full
// right-hand side at the current state is always available.
class Stepper {
public:
    Stepper(const Generator& gen, const Matrix& rho0, double t0, const PropagateOptions& opt, Trajectory& stats)
        : gen_(gen), opt_(opt), stats_(stats), u_(rho0), t_(t0), dim_(gen.dim())
    {
        if (exponential()) {
            d_ = gen_.effective_diagonal();
        } else {
            d_ = Vector::Zero(dim_);
        }
        lam_.resize(dim_, dim_);
        for (int m = 0; m < dim_; ++m) {
            for (int n = 0; n < dim_; ++n) lam_(n, m) = d_(n) + std::conj(d_(m));
        }
        if (opt_.method == Integrator::Rk4Fixed && !(opt_.fixed_step > 0.0)) {
            throw ConfigError("fixed-step RK4 needs fixed_step > 0");
        }
        if (!(opt_.tol > 0.0)) {
            throw ConfigError("integrator tolerance must be > 0");
        }
        k1_ = nonstiff(u_);
        hermitize(k1_);
    }

    double time() const noexcept { return t_; }
    const Matrix& state() const noexcept { return u_; }

    /// ||L rho||_F at the current state.
    double residual() const { return (k1_ + lam_.cwiseProduct(u_)).norm(); }

    /// Steps to exactly t_end. `stop(stepper)` is consulted after every
    /// accepted step; returning true ends the advance early.
    template <class Stop>
    bool advance(double t_end, Stop&& stop)
    {
        if (opt_.method == Integrator::Rk4Fixed) return advance_rk4(t_end, stop);
        if (h_ <= 0.0) h_ = initial_step(t_end - t_);
        while (t_ < t_end) {
            const double remaining = t_end - t_;
            double h = std::min(h_, remaining);
            bool clamped = h < h_;
            if (remaining - h <= 1e-12 * std::max(1.0, std::abs(t_end))) {
                h = remaining;
            }
            if (!(h > 1e-14 * std::max(1.0, std::abs(t_)))) {
                throw StepSizeUnderflowError("step size underflow at t=" + detail::num(t_) +
                                             " (h=" + detail::num(h) + ")");
            }
            if (stats_.accepted_steps + stats_.rejected_steps >= opt_.max_steps) {
                throw StepSizeUnderflowError("step budget of " + std::to_string(opt_.max_steps) +
                                             " exhausted at t=" + detail::num(t_));
            }
            double err = 0.0;
            Matrix next = attempt(h, err);
            if (err <= 1.0) {
                const double fac = err == 0.0 ? kFacMax
                                              : std::clamp(kSafety * std::pow(err, -kExpo) *
                                                               std::pow(err_old_, kBeta),
                                                           kFacMin, kFacMax);
                err_old_ = std::max(err, 1e-4);
                const double suggested = h * (reject_streak_ ? std::min(fac, 1.0) : fac);
                h_ = clamped ? std::max(h_, suggested) : suggested;
                reject_streak_ = false;
                accept(std::move(next), h);
                if (t_end - t_ <= 1e-12 * std::max(1.0, std::abs(t_end))) t_ = t_end;
                if (stop(*this)) return true;
            } else {
                ++stats_.rejected_steps;
                const double fac = std::isfinite(err) ? std::max(kFacMin, kSafety * std::pow(err, -kExpo)) : kFacMin;
                h_ = h * std::min(fac, 1.0);
                reject_streak_ = true;
            }
        }
        return false;
    }

private:
    Matrix nonstiff(const Matrix& x)
    {
        ++stats_.rhs_evaluations;
        Matrix out = gen_.apply(x);
        if (exponential()) out -= lam_.cwiseProduct(x);
        return out;
    }

    bool exponential() const noexcept
    {
        return opt_.method == Integrator::LawsonDopri5;
    }

    // diag(e) X diag(conj e) with e = exp(tau d), the exact flow of the
    // Hadamard part over time tau.
    Matrix scaled(const Vector& e, const Matrix& x) const
    {
        return e.asDiagonal() * x * e.conjugate().asDiagonal();
    }

    double initial_step(double span) const
    {
        const Matrix sc = (opt_.tol * (1.0 + u_.cwiseAbs().array())).matrix();
        const double d0 = std::sqrt((u_.cwiseAbs().array() / sc.array().real()).square().mean());
        const double d1 = std::sqrt((k1_.cwiseAbs().array() / sc.array().real()).square().mean());
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        return std::min(h0, span);
    }

    Matrix attempt(double h, double& err)
    {
        const bool lawson = opt_.method == Integrator::LawsonDopri5;
        // exp(tau h d) for each stage time and for 1 - c_j.
        std::array<Vector, kStages> e_c, e_rem;
        if (lawson) {
            for (int i = 0; i < kStages; ++i) {
                e_c[static_cast<std::size_t>(i)] = (kC[static_cast<std::size_t>(i)] * h * d_).array().exp();
                e_rem[static_cast<std::size_t>(i)] =
                    ((1.0 - kC[static_cast<std::size_t>(i)]) * h * d_).array().exp();
            }
        }
        // exp((c_i - c_j) h d) = exp(c_i h d) / exp(c_j h d) would lose
        // accuracy for strongly damped levels, so it is formed directly.
        auto factor = [&](int i, int j) -> Vector {
            return ((kC[static_cast<std::size_t>(i)] - kC[static_cast<std::size_t>(j)]) * h * d_).array().exp();
        };

        std::array<Matrix, kStages> k;
        k[0] = k1_;
        Matrix stage;
        for (int i = 1; i < kStages; ++i) {
            stage = lawson ? scaled(e_c[static_cast<std::size_t>(i)], u_) : u_;
            for (int j = 0; j < i; ++j) {
                const double a = kA[i][j];
                if (a == 0.0) continue;
                if (lawson && kC[static_cast<std::size_t>(i)] != kC[static_cast<std::size_t>(j)]) {
                    stage += (h * a) * scaled(factor(i, j), k[static_cast<std::size_t>(j)]);
                } else {
                    stage += (h * a) * k[static_cast<std::size_t>(j)];
                }
            }
            k[static_cast<std::size_t>(i)] = nonstiff(stage);
        }
        // stage now holds the 5th order solution (row 6 of kA).
        Matrix delta = Matrix::Zero(dim_, dim_);
        for (int j = 0; j < kStages; ++j) {
            const double ej = kE[static_cast<std::size_t>(j)];
            if (ej == 0.0) continue;
            if (lawson && kC[static_cast<std::size_t>(j)] != 1.0) {
                delta += (h * ej) * scaled(e_rem[static_cast<std::size_t>(j)], k[static_cast<std::size_t>(j)]);
            } else {
                delta += (h * ej) * k[static_cast<std::size_t>(j)];
            }
        }
        err = error_norm(delta, stage);
        k_last_ = std::move(k[kStages - 1]);
        return stage;
    }

    double error_norm(const Matrix& delta, const Matrix& next) const
    {
        const double tol = opt_.tol;
        double sum = 0.0;
        for (int m = 0; m < dim_; ++m) {
            for (int n = 0; n < dim_; ++n) {
                const double sc = tol + tol * std::max(std::abs(u_(n, m)), std::abs(next(n, m)));
                const double r = std::abs(delta(n, m)) / sc;
                sum += r * r;
            }
        }
        const double err = std::sqrt(sum / (static_cast<double>(dim_) * dim_));
        return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
    }

    void accept(Matrix next, double h)
    {
        u_ = std::move(next);
        hermitize(u_);
        // The Lawson scheme conserves Tr rho only to the local error;
        // the correction is applied and its size recorded.
        const double tr = u_.trace().real();
        stats_.max_step_trace_correction = std::max(stats_.max_step_trace_correction, std::abs(tr - 1.0));
        u_ /= tr;
        // L(X^dag) = L(X)^dag, so the FSAL stage is hermitized the same way.
        k1_ = std::move(k_last_) / tr;
        hermitize(k1_);
        t_ += h;
        ++stats_.accepted_steps;
        after_step();
    }

    void after_step()
    {
        const double top = top_population(u_);
        stats_.max_top_population = std::max(stats_.max_top_population, top);
        stats_.max_trace_error = std::max(stats_.max_trace_error, std::abs(u_.trace() - complex(1.0, 0.0)));
        if (opt_.truncation_guard && top > opt_.top_population_limit) {
            throw TruncationBreachError("population " + detail::num(top) + " of the top Fock level |" +
                                            std::to_string(dim_ - 1) + "> exceeds " +
                                            detail::num(opt_.top_population_limit) + " at t=" +
                                            detail::num(t_) + "; increase dim",
                                        t_);
        }
        if (!u_.allFinite()) {
            throw CorruptedStateError("non-finite density matrix at t=" + detail::num(t_));
        }
    }

    template <class Stop>
    bool advance_rk4(double t_end, Stop&& stop)
    {
        while (t_ < t_end) {
            double h = std::min(opt_.fixed_step, t_end - t_);
            if (t_end - t_ - h <= 1e-12 * std::max(1.0, std::abs(t_end))) h = t_end - t_;
            if (stats_.accepted_steps >= opt_.max_steps) {
                throw StepSizeUnderflowError("step budget exhausted at t=" + detail::num(t_));
            }
            const Matrix& k1 = k1_;
            const Matrix k2 = nonstiff(u_ + (0.5 * h) * k1);
            const Matrix k3 = nonstiff(u_ + (0.5 * h) * k2);
            const Matrix k4 = nonstiff(u_ + h * k3);
            Matrix next = u_ + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            u_ = std::move(next);
            hermitize(u_);
            t_ += h;
            if (t_end - t_ <= 1e-12 * std::max(1.0, std::abs(t_end))) t_ = t_end;
            k1_ = nonstiff(u_);
            hermitize(k1_);
            ++stats_.accepted_steps;
            after_step();
            if (stop(*this)) return true;
        }
        return false;
    }

    const Generator& gen_;
    const PropagateOptions& opt_;
    Trajectory& stats_;
    Matrix u_;
    Matrix k1_;
    Matrix k_last_;
    Vector d_;
    Matrix lam_;
    double t_;
    double h_ = 0.0;
    double err_old_ = 1e-4;
    bool reject_streak_ = false;
    int dim_;
};

void check_grid(std::span<const double> grid)
{
    if (grid.empty()) {
        throw ConfigError("time grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) {
            throw ConfigError("time grid contains a non-finite value");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ConfigError("time grid must be strictly increasing");
        }
    }
}

}  // namespace

Integrator parse_integrator(const std::string& name)
{
    if (name == "lawson-dopri5" || name == "auto") return Integrator::LawsonDopri5;
    if (name == "dopri5") return Integrator::Dopri5;
    if (name == "rk4") return Integrator::Rk4Fixed;
    throw ConfigError("unknown integrator '" + name + "' (expected lawson-dopri5, dopri5 or rk4)");
}

std::string to_string(Integrator method)
{
    switch (method) {
    case Integrator::LawsonDopri5: return "lawson-dopri5";
    case Integrator::Dopri5: return "dopri5";
    case Integrator::Rk4Fixed: return "rk4";
    }
    return "unknown";
}

Trajectory propagate(const MasterEquation& me, const DensityMatrix& rho0, std::span<const double> grid,
                     const PropagateOptions& options)
{
    return propagate(make_generator(me), rho0, grid, options);
}

Trajectory propagate(const Generator& gen, const DensityMatrix& rho0, std::span<const double> grid,
                     const PropagateOptions& options)
{
    check_grid(grid);
    if (rho0.dim() != gen.dim()) {
        throw DimensionMismatchError("propagate: initial state has dimension " + std::to_string(rho0.dim()) +
                                     ", generator " + std::to_string(gen.dim()));
    }
    Trajectory traj;
    traj.times.reserve(grid.size());
    traj.diagnostics.reserve(grid.size());

    auto record = [&](double t, const Matrix& u) {
        const DensityDiagnostics d = diagnose_density(u);
        traj.diagnostics.push_back({t, d.trace_error, d.hermiticity_error, d.min_eigenvalue, top_population(u)});
        DensityMatrix state = DensityMatrix::from_diagnosed(u, d);
        traj.times.push_back(t);
        if (options.observer) options.observer(t, state);
        if (options.keep_states || traj.states.empty()) {
            traj.states.push_back(std::move(state));
        } else {
            traj.states.back() = std::move(state);
        }
    };

    Stepper stepper(gen, rho0.matrix(), grid[0], options, traj);
    record(grid[0], rho0.matrix());
    auto never = [](const Stepper&) { return false; };
    for (std::size_t i = 1; i < grid.size(); ++i) {
        stepper.advance(grid[i], never);
        record(grid[i], stepper.state());
    }
    return traj;
}

SteadyResult evolve_to_steady(const MasterEquation& me, const DensityMatrix& rho0, const SteadyOptions& options)
{
    return evolve_to_steady(make_generator(me), rho0, options);
}

namespace {

using StepSolve = std::function<Matrix(const Matrix&)>;

// Sparse LU of I - hL. Fill-in makes this slow when K is dense.
StepSolve sparse_step(const SparseMatrix& s, int d, double h)
{
    using Triplet = Eigen::Triplet<complex>;
    const Eigen::Index n = s.rows();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(s.nonZeros() + n));
    for (Eigen::Index c = 0; c < s.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(s, c); it; ++it) trip.emplace_back(it.row(), it.col(), -h * it.value());
    }
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, complex(1.0, 0.0));
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
    lu->compute(m);
    if (lu->info() != Eigen::Success) {
        throw NumericalError("backward-Euler factorization failed at h=" + detail::num(h));
    }
    return [lu, d](const Matrix& b) {
        const Vector x = lu->solve(Eigen::Map<const Vector>(b.data(), b.size()));
        return Matrix(Eigen::Map<const Matrix>(x.data(), d, d));
    };
}

// x - h L(x) = b when every sandwich L_j x R_j has low rank: K in Schur
// form turns x - h(Kx + xK^dag) into triangular solves (Bartels-Stewart),
// and the sandwiches enter through a small Woodbury system. All factors are
// kept in the Schur basis.
struct LowRankForm {
    struct Term {
        double weight;
        Matrix u, v;  // L = u v^dag
        Matrix p, q;  // R = p q^dag
    };
    Matrix z;
    Matrix t;
    std::vector<Term> terms;
    int rank = 0;
};

std::pair<Matrix, Matrix> low_rank(const Matrix& m)
{
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > 1e-13 * sv(0)) ++r;
    return {svd.matrixU().leftCols(r) * sv.head(r).asDiagonal(), svd.matrixV().leftCols(r)};
}

std::optional<LowRankForm> low_rank_form(const Generator& gen)
{
    const int d = gen.dim();
    LowRankForm f;
    for (const auto& s : gen.sandwiches()) {
        auto [u, v] = low_rank(s.left);
        auto [p, q] = low_rank(s.right);
        f.rank += static_cast<int>(u.cols() * p.cols());
        if (f.rank > d) return std::nullopt;
        f.terms.push_back({s.weight, u, v, p, q});
    }
    Eigen::ComplexSchur<Matrix> schur(gen.effective());
    f.z = schur.matrixU();
    f.t = schur.matrixT();
    for (auto& term : f.terms) {
        term.u = f.z.adjoint() * term.u;
        term.v = f.z.adjoint() * term.v;
        term.p = f.z.adjoint() * term.p;
        term.q = f.z.adjoint() * term.q;
    }
    return f;
}

// y - h(Ty + yT^dag) = c for upper triangular T, last column first.
Matrix schur_sylvester(const Matrix& t, double h, const Matrix& c)
{
    const Eigen::Index d = t.rows();
    Matrix y(d, d);
    Matrix a = -h * t;
    a.diagonal().array() += 1.0;
    for (Eigen::Index j = d - 1; j >= 0; --j) {
        Vector rhs = c.col(j);
        const Eigen::Index tail = d - 1 - j;
        if (tail > 0) rhs += h * (y.rightCols(tail) * t.row(j).tail(tail).adjoint());
        const complex shift = h * std::conj(t(j, j));
        a.diagonal().array() -= shift;
        y.col(j) = a.triangularView<Eigen::Upper>().solve(rhs);
        a.diagonal().array() += shift;
    }
    return y;
}

StepSolve low_rank_step(std::shared_ptr<const LowRankForm> f, double h)
{
    // Inner coordinates zeta_(j,a,b) = v_ja^dag y p_jb.
    auto inner = [f](const Matrix& y) {
        Vector out(f->rank);
        Eigen::Index k = 0;
        for (const auto& term : f->terms) {
            const Matrix zeta = term.v.adjoint() * y * term.p;
            for (Eigen::Index b = 0; b < zeta.cols(); ++b)
                for (Eigen::Index a = 0; a < zeta.rows(); ++a) out(k++) = zeta(a, b);
        }
        return out;
    };
    // Sum over terms of h w_j u_j zeta_j q_j^dag.
    auto outer = [f, h](const Vector& zeta) {
        const Eigen::Index d = f->t.rows();
        Matrix out = Matrix::Zero(d, d);
        Eigen::Index k = 0;
        for (const auto& term : f->terms) {
            const Eigen::Index r = term.u.cols(), s = term.p.cols();
            const Matrix block = Eigen::Map<const Matrix>(zeta.data() + k, r, s);
            out += (h * term.weight) * (term.u * block * term.q.adjoint());
            k += r * s;
        }
        return out;
    };
    if (f->rank == 0) {
        return [f, h](const Matrix& b) {
            return Matrix(f->z * schur_sylvester(f->t, h, f->z.adjoint() * b * f->z) * f->z.adjoint());
        };
    }
    Matrix m = Matrix::Identity(f->rank, f->rank);
    for (Eigen::Index k = 0; k < f->rank; ++k) {
        m.col(k) -= inner(schur_sylvester(f->t, h, outer(Vector::Unit(f->rank, k))));
    }
    auto lu = std::make_shared<Eigen::PartialPivLU<Matrix>>(m);
    return [f, h, lu, inner, outer](const Matrix& b) {
        const Matrix c = f->z.adjoint() * b * f->z;
        const Vector zeta = lu->solve(inner(schur_sylvester(f->t, h, c)));
        const Matrix y = schur_sylvester(f->t, h, c + outer(zeta));
        return Matrix(f->z * y * f->z.adjoint());
    };
}

// Backward Euler rho_{k+1} = (I - h_k L)^{-1} rho_k with h_k growing tenfold.
// Unconditionally stable and exact at fixed points; its t -> infinity limit
// is the spectral projection of rho onto ker L, the same as the true flow.
bool implicit_settle(const Generator& gen, Matrix& rho, double& t, double t_max, double h0, double tol,
                     double& residual, Trajectory& stats, std::string& method)
{
    const int d = gen.dim();
    std::shared_ptr<const LowRankForm> form;
    if (auto f = low_rank_form(gen)) form = std::make_shared<const LowRankForm>(std::move(*f));
    const SparseMatrix s = form ? SparseMatrix() : gen.superoperator();
    method += form ? "+backward-euler:low-rank" : "+backward-euler";
    double h = std::max(h0, 1e-12);
    for (int k = 0; k < 40 && t < t_max; ++k) {
        h = std::min(h, t_max - t);
        const StepSolve solve = form ? low_rank_step(form, h) : sparse_step(s, d, h);
        Matrix x = solve(rho);
        x += solve(rho - (x - h * gen.apply(x)));
        rho = std::move(x);
        hermitize(rho);
        const double tr = rho.trace().real();
        stats.max_step_trace_correction = std::max(stats.max_step_trace_correction, std::abs(tr - 1.0));
        rho /= tr;
        t += h;
        ++stats.accepted_steps;
        residual = gen.apply(rho).norm();
        if (residual < tol) return true;
        h *= 10.0;
    }
    return false;
}

}  // namespace

SteadyResult evolve_to_steady(const Generator& gen, const DensityMatrix& rho0, const SteadyOptions& options)
{
    if (rho0.dim() != gen.dim()) {
        throw DimensionMismatchError("evolve_to_steady: dimension mismatch");
    }
    if (!(options.t_max > 0.0)) {
        throw ConfigError("evolve_to_steady needs t_max > 0");
    }
    Trajectory stats;
    Stepper stepper(gen, rho0.matrix(), 0.0, options.propagate, stats);
    double residual = stepper.residual();
    bool converged = residual < options.tol;
    bool stalled = false;
    std::string method = "evolve:" + to_string(options.propagate.method);
    if (!converged) {
        double best = residual;
        long best_step = 0;
        long step = 0;
        converged = stepper.advance(options.t_max, [&](const Stepper& s) {
            residual = s.residual();
            ++step;
            if (residual < 0.9 * best) {
                best = residual;
                best_step = step;
            }
            stalled = step - best_step >= options.stall_steps;
            return residual < options.tol || stalled;
        });
        converged = residual < options.tol;
    }
    Matrix u = stepper.state();
    double t = stepper.time();
    if (!converged && stalled && gen.dim() <= options.implicit_max_dim) {
        const double h0 = std::max(1.0, t);
        converged = implicit_settle(gen, u, t, options.t_max, h0, options.tol, residual, stats, method);
    }
    return SteadyResult{DensityMatrix::from_diagnosed(u, diagnose_density(u)), converged, t, residual, method,
                        std::move(stats)};
}

double gadget_residual(const ProjectorGadget& g, const DensityMatrix& rho, double initial_weight)
{
    if (rho.dim() != g.dim()) {
        throw DimensionMismatchError("gadget_residual: dimension mismatch");
    }
    const Matrix& p = g.projector().matrix();
    const Vector& c = g.complement().amplitudes();
    return (p * rho.matrix() * p - initial_weight * (c * c.adjoint())).norm();
}

double decay_rate_fit(const Trajectory& traj, const ProjectorGadget& g)
{
    if (traj.states.size() != traj.times.size() || traj.states.empty()) {
        throw ConfigError("decay_rate_fit needs a trajectory with all states kept");
    }
    const double w0 = (g.projector().matrix() * traj.states.front().matrix()).trace().real();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double r = gadget_residual(g, traj.states[i], w0);
        if (r < 1e-8 || r > 1e-2) continue;
        const double x = traj.times[i];
        const double y = std::log(r);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) {
        throw InsufficientDecayError("residual enters [1e-8, 1e-2] at " + std::to_string(count) +
                                     " recorded times; need at least 2 (extend or refine the grid)");
    }
    const double denom = count * sxx - sx * sx;
    if (!(denom > 0.0)) {
        throw InsufficientDecayError("decay window has zero time extent");
    }
    return -(count * sxy - sx * sy) / denom;
}

std::vector<double> linear_grid(double t0, double t1, int n)
{
    if (n < 2 || !(t1 > t0)) {
        throw ConfigError("linear grid needs n >= 2 and t1 > t0");
    }
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        g[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (n - 1);
    }
    g.back() = t1;
    return g;
}

std::vector<double> log_grid(double t0, double t1, int n)
{
    if (n < 2 || !(t0 > 0.0) || !(t1 > t0)) {
        throw ConfigError("log grid needs n >= 2 and 0 < t0 < t1");
    }
    std::vector<double> g(static_cast<std::size_t>(n));
    const double l0 = std::log(t0);
    const double l1 = std::log(t1);
    for (int i = 0; i < n; ++i) {
        g[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
    }
    g.front() = t0;
    g.back() = t1;
    return g;
}

}  // namespace nldiss
