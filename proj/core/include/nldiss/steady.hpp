#pragma once

#include "nldiss/distribution.hpp"
#include "nldiss/evolve.hpp"
#include "nldiss/fock.hpp"
#include "nldiss/liouvillian.hpp"
#include "nldiss/nonlinear_function.hpp"

namespace nldiss {

struct NullspaceOptions {
    /// Largest Fock dimension accepted; above it DimensionCapError is thrown.
    int max_dim = 64;
    double residual_tol = 1e-10;
    /// Threshold on the smallest singular value of the trace-bordered
    /// Liouvillian below which the steady state is declared non-unique.
    double uniqueness_tol = 1e-10;
};

/// Unique steady state from a sparse LU of the Liouvillian whose first row
/// (the rho_00 equation) is replaced by the trace condition Tr rho = 1.
/// The result is hermitized and checked against ||L rho||_F <= residual_tol.
DensityMatrix steady_state_nullspace(const MasterEquation& me, const NullspaceOptions& options = {});
DensityMatrix steady_state_nullspace(const Generator& gen, const NullspaceOptions& options = {});

/// Diagonal of the stationary state of the truncated NCL equation:
///   p_n = p_{n-1} alpha0^2 / (n (f(n)^2 + eps)^2),
/// seeded with p_start = 1 and p_n = 0 below `start`. Computed in the log
/// domain. Throws BlockedRecurrenceError at a vanishing denominator and
/// TailGuardError when p_{dim-1} >= 1e-12 after normalization.
DiagonalDistribution ncl_recurrence(const NonlinearFunction& f, double alpha0, double epsilon, int dim,
                                    int start = 0);

/// Largest n in [1, dim) where f(n)^2 + eps vanishes, or 0 when none does.
/// A valid `start` for ncl_recurrence is any index at or above it.
int ncl_blocking_index(const NonlinearFunction& f, double epsilon, int dim);

/// Exact diagonal steady state without driving:
///   p_n = p_{n-1} nbar / ((nbar + 1) + loss_ratio f(n)^2),  loss_ratio = gamma/Gamma.
DiagonalDistribution thermal_recurrence(const NonlinearFunction& f, double nbar, double loss_ratio, int dim);

struct PeakEstimate {
    int n0 = 0;
    double variance = 0.0;
    /// variance / n0 - 1; NaN when n0 = 0.
    double q_estimate = 0.0;
};

/// n0 = argmin_n |n (f(n)^2 + eps)^2 - alpha0^2| over 0..dim-1 (ties to the
/// smaller n) and the Gaussian width n0 / (1 + 4 n0 f'(n0) f(n0) / (f(n0)^2 + eps)).
/// Throws WindowTooSmallError when the minimum sits at dim-1.
PeakEstimate peak_condition(const NonlinearFunction& f, double alpha0, double epsilon, int dim);

/// Predicted p_{n0+dn} / p_{n0}:
///   exp(-|dn|(|dn|+1) / (2 n0) * (1 + 4 n0 f'(n0) f(n0) / (f(n0)^2 + eps))).
double gaussian_profile(const NonlinearFunction& f, int n0, double epsilon, int delta_n);

/// Generator of the NCL equation with the double commutator
/// gamma a[[rho, f], f]a^dag removed:
///   -i[H, rho] + gamma (a rho B^dag + B rho a^dag - a^dag B rho - rho B^dag a),
///   B = a (f(a^dag a)^2 + eps), eps = Gamma / gamma.
/// Requires nbar = 0, gamma > 0 and an engineered operator equal to a f(a^dag a).
Generator approximate_generator(const MasterEquation& me, const NonlinearFunction& f);

FockOperator approximate_rhs(const MasterEquation& me, const NonlinearFunction& f, const FockOperator& rho);
FockOperator approximate_rhs(const MasterEquation& me, const NonlinearFunction& f, const DensityMatrix& rho);

/// a [[rho, f], f] a^dag, the term separating the full and approximate equations.
FockOperator double_commutator_term(const NonlinearFunction& f, const FockOperator& rho);

/// Steady state of the approximate equation: null space up to the cap,
/// evolution from the vacuum above it.
SteadyResult approximate_steady_state(const MasterEquation& me, const NonlinearFunction& f,
                                      const NullspaceOptions& nullspace = {}, const SteadyOptions& evolve = {});

/// Steady state of the full equation by the same rule.
SteadyResult steady_state(const MasterEquation& me, const NullspaceOptions& nullspace = {},
                          const SteadyOptions& evolve = {});

}  // namespace nldiss
