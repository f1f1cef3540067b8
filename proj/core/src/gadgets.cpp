#include "nldiss/gadgets.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nldiss/errors.hpp"

namespace nldiss {

namespace {

constexpr double kParallelTol = 1e-12;

StateVector normalized_creation_power(const StateVector& y, int k, bool guard, double& norm)
{
    norm = normal_order_norm(y, k, guard);
    if (!(norm > 0.0)) {
        throw DegenerateGadgetError("(a^dag)^k |y> vanishes in the truncated space");
    }
    return StateVector(apply_creation_power(y.amplitudes(), k));
}

StateVector orthogonal_part(const StateVector& phi, const StateVector& psi, complex overlap)
{
    if (std::abs(1.0 - std::abs(overlap)) <= kParallelTol) {
        throw DegenerateGadgetError("target is parallel to (a^dag)^k|y>; the complement is undefined");
    }
    Vector c = phi.amplitudes() - overlap * psi.amplitudes();
    // One re-orthogonalization pass keeps |<c|psi>| at rounding level when
    // the overlap is large.
    c -= psi.amplitudes().dot(c) * psi.amplitudes();
    return StateVector(std::move(c));
}

}  // namespace

ProjectorGadget::ProjectorGadget(StateVector target, StateVector source, int k, bool guard)
    : target_(std::move(target)),
      source_(std::move(source)),
      k_(k),
      psi_(fock_state(0, std::max(2, source_.dim()))),
      norm_(0.0),
      complement_(psi_),
      projector_(FockOperator::zero(std::max(2, source_.dim())))
{
    if (k < 1) {
        throw ConfigError("projector gadget needs k >= 1, got " + std::to_string(k));
    }
    if (target_.dim() != source_.dim()) {
        throw DimensionMismatchError("projector gadget: target and source dimensions differ");
    }
    psi_ = normalized_creation_power(source_, k_, guard, norm_);
    overlap_ = target_.inner(psi_);
    complement_ = orthogonal_part(target_, psi_, psi_.inner(target_));
    projector_ = psi_.projector() + complement_.projector();
}

FockOperator projector_lindblad(const ProjectorGadget& g, int dim)
{
    if (dim != g.dim()) {
        throw DimensionMismatchError("projector_lindblad: gadget has dimension " + std::to_string(g.dim()) +
                                     ", requested " + std::to_string(dim));
    }
    // <y| a^k = ((a^dag)^k |y>)^dag
    const Vector w = apply_creation_power(g.source().amplitudes(), g.k());
    return FockOperator(g.target().amplitudes() * w.adjoint());
}

FockOperator ncl_lindblad(const NonlinearFunction& f, int dim)
{
    return annihilation(dim) * diagonal_function_operator(f, dim);
}

double gamma_eff(const ProjectorGadget& g, double gamma)
{
    const double ov2 = std::norm(g.overlap());
    return std::min(1.0, 2.0 * (1.0 - ov2)) * g.norm_factor() * gamma;
}

double steady_fidelity_prediction(const ProjectorGadget& g, const DensityMatrix& rho0)
{
    if (rho0.dim() != g.dim()) {
        throw DimensionMismatchError("steady_fidelity_prediction: dimension mismatch");
    }
    const double weight = (g.projector().matrix() * rho0.matrix()).trace().real();
    return (1.0 - std::norm(g.overlap())) * weight;
}

double jump_rate_ratio(const MasterEquation& me, const StateVector& psi)
{
    if (psi.dim() != me.dim()) {
        throw DimensionMismatchError("jump_rate_ratio: dimension mismatch");
    }
    const Vector& v = psi.amplitudes();
    const Matrix& a_op = me.engineered().matrix();
    const double engineered = me.gamma_nonlinear() * (a_op * v).squaredNorm();
    const double scale = me.gamma_nonlinear() * a_op.squaredNorm();
    if (!(engineered > 1e-14 * scale) || engineered == 0.0) {
        throw UndefinedRatioError("jump_rate_ratio: gamma <psi|A^dag A|psi> vanishes");
    }
    if (me.gamma_linear() == 0.0) return 0.0;
    double mean_n = 0.0;
    for (int n = 0; n < psi.dim(); ++n) {
        mean_n += n * std::norm(v(n));
    }
    return me.gamma_linear() * (me.nbar() + 1.0) * mean_n / engineered;
}

MasterEquation ncl_master_equation(int dim, double gamma_linear, double gamma_nonlinear, double nbar,
                                   double omega, const NonlinearFunction& f)
{
    return MasterEquation(dim, gamma_linear, gamma_nonlinear, nbar, omega, ncl_lindblad(f, dim));
}

MasterEquation projector_master_equation(const ProjectorGadget& g, double gamma_linear,
                                         double gamma_nonlinear, double nbar, double omega)
{
    return MasterEquation(g.dim(), gamma_linear, gamma_nonlinear, nbar, omega, projector_lindblad(g, g.dim()));
}

}  // namespace nldiss
