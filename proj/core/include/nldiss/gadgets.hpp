#pragma once

#include "nldiss/fock.hpp"
#include "nldiss/liouvillian.hpp"
#include "nldiss/nonlinear_function.hpp"

namespace nldiss {

/// Data of the projector gadget A = |phi><y| a^k.
///
///   psi        = N^{-1/2} (a^dag)^k |y>,  N = ||(a^dag)^k |y>||^2
///   complement = normalized component of |phi> orthogonal to |psi>
///   projector  = |psi><psi| + |complement><complement|
///
/// The dissipator pumps everything inside span{phi, psi} into `complement`.
class ProjectorGadget {
public:
    /// Throws DegenerateGadgetError when |<phi|psi>| = 1 within 1e-12, and
    /// TruncationLeakageError (with `guard`) when (a^dag)^k|y> does not fit.
    ProjectorGadget(StateVector target, StateVector source, int k, bool guard = true);

    int dim() const noexcept { return target_.dim(); }
    int k() const noexcept { return k_; }
    const StateVector& target() const noexcept { return target_; }
    const StateVector& source() const noexcept { return source_; }
    const StateVector& psi() const noexcept { return psi_; }
    double norm_factor() const noexcept { return norm_; }
    /// <phi|psi>
    complex overlap() const noexcept { return overlap_; }
    const StateVector& complement() const noexcept { return complement_; }
    const FockOperator& projector() const noexcept { return projector_; }

    /// k = 1 works numerically but is below the k > 1 range the gadget was
    /// designed for.
    bool outside_design_regime() const noexcept { return k_ == 1; }

private:
    StateVector target_;
    StateVector source_;
    int k_;
    StateVector psi_;
    double norm_;
    complex overlap_;
    StateVector complement_;
    FockOperator projector_;
};

/// |phi><y| a^k as a dense matrix.
FockOperator projector_lindblad(const ProjectorGadget& g, int dim);

/// a f(a^dag a).
FockOperator ncl_lindblad(const NonlinearFunction& f, int dim);

/// min{1, 2(1 - |<phi|psi>|^2)} N gamma
double gamma_eff(const ProjectorGadget& g, double gamma);

/// Predicted long-time target population (1 - |<phi|psi>|^2) Tr{P rho0},
/// valid without linear loss.
double steady_fidelity_prediction(const ProjectorGadget& g, const DensityMatrix& rho0);

/// Gamma (nbar+1) <psi|a^dag a|psi> / (gamma <psi|A^dag A|psi>): linear-loss
/// jumps per engineered jump while the system sits in |psi>. Throws
/// UndefinedRatioError when the denominator vanishes.
double jump_rate_ratio(const MasterEquation& me, const StateVector& psi);

MasterEquation ncl_master_equation(int dim, double gamma_linear, double gamma_nonlinear, double nbar,
                                   double omega, const NonlinearFunction& f);

MasterEquation projector_master_equation(const ProjectorGadget& g, double gamma_linear,
                                         double gamma_nonlinear, double nbar, double omega);

}  // namespace nldiss
