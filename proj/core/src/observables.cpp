#include "nldiss/observables.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nldiss/errors.hpp"
#include "format.hpp"

namespace nldiss {

// ---------------------------------------------------------------------------
// DiagonalDistribution

DiagonalDistribution::DiagonalDistribution(std::vector<double> weights) : p_(std::move(weights))
{
    if (p_.size() < 2) {
        throw InvalidDimensionError("distribution needs at least two entries");
    }
    double sum = 0.0;
    for (double w : p_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw CorruptedStateError("distribution weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (!(sum > 0.0)) {
        throw CorruptedStateError("distribution has zero total weight");
    }
    for (double& w : p_) w /= sum;
}

DiagonalDistribution DiagonalDistribution::poisson(double mean, int dim)
{
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw ConfigError("Poisson mean must be finite and >= 0");
    }
    std::vector<double> p(static_cast<std::size_t>(std::max(dim, 0)), 0.0);
    if (dim < 2) {
        throw InvalidDimensionError("distribution needs at least two entries");
    }
    if (mean == 0.0) {
        p[0] = 1.0;
        return DiagonalDistribution(std::move(p));
    }
    const double log_mean = std::log(mean);
    for (int n = 0; n < dim; ++n) {
        p[static_cast<std::size_t>(n)] = std::exp(-mean + n * log_mean - std::lgamma(n + 1.0));
    }
    return DiagonalDistribution(std::move(p));
}

double DiagonalDistribution::mean() const
{
    double m = 0.0;
    for (std::size_t n = 0; n < p_.size(); ++n) m += static_cast<double>(n) * p_[n];
    return m;
}

double DiagonalDistribution::variance() const
{
    const double m = mean();
    double v = 0.0;
    for (std::size_t n = 0; n < p_.size(); ++n) {
        const double d = static_cast<double>(n) - m;
        v += d * d * p_[n];
    }
    return v;
}

double DiagonalDistribution::mandel_q() const
{
    const double m = mean();
    return mandel_q_from_moments(m, variance() + m * m);
}

double mandel_q_from_moments(double mean, double second_moment)
{
    if (!(mean > 1e-14)) {
        throw UndefinedMandelQError("Mandel Q is undefined for the vacuum (<n> = " + detail::num(mean) + ")");
    }
    return (second_moment - mean * mean) / mean - 1.0;
}

// ---------------------------------------------------------------------------
// Observables

double mandel_q(const DensityMatrix& rho)
{
    // Central second moment avoids cancellation in <n^2> - <n>^2.
    const Matrix& m = rho.matrix();
    double mean = 0.0;
    for (int n = 0; n < rho.dim(); ++n) mean += n * m(n, n).real();
    double var = 0.0;
    for (int n = 0; n < rho.dim(); ++n) {
        const double d = n - mean;
        var += d * d * m(n, n).real();
    }
    return mandel_q_from_moments(mean, var + mean * mean);
}

double fidelity_to_pure(const DensityMatrix& rho, const StateVector& phi)
{
    if (rho.dim() != phi.dim()) {
        throw DimensionMismatchError("fidelity_to_pure: dimension mismatch");
    }
    const Vector& v = phi.amplitudes();
    return v.dot(rho.matrix() * v).real();
}

DiagonalDistribution photon_distribution(const DensityMatrix& rho)
{
    constexpr double kClip = -1e-10;
    std::vector<double> p(static_cast<std::size_t>(rho.dim()));
    double mass = 0.0;
    for (int n = 0; n < rho.dim(); ++n) {
        double v = rho.matrix()(n, n).real();
        if (v < 0.0) {
            if (v < kClip) {
                throw CorruptedStateError("negative population " + std::to_string(v) + " at n=" + std::to_string(n));
            }
            v = 0.0;
        }
        p[static_cast<std::size_t>(n)] = v;
        mass += v;
    }
    if (!(mass >= 0.999)) {
        throw CorruptedStateError("diagonal carries only " + detail::num(mass) + " of the probability");
    }
    return DiagonalDistribution(std::move(p));
}

double purity(const DensityMatrix& rho)
{
    // Tr rho^2 = sum |rho_ij|^2 for Hermitian rho.
    return rho.matrix().squaredNorm();
}

double trace_distance(const Matrix& rho, const Matrix& sigma)
{
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
        throw DimensionMismatchError("trace_distance: dimension mismatch");
    }
    const Matrix diff = rho - sigma;
    const Matrix herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma)
{
    return trace_distance(rho.matrix(), sigma.matrix());
}

ObservableReport observe(const DensityMatrix& rho, const StateVector* target)
{
    ObservableReport r{0.0, 0.0, 0.0, 0.0, std::nullopt, photon_distribution(rho)};
    r.mean_n = r.distribution.mean();
    r.variance_n = r.distribution.variance();
    try {
        r.mandel_q = mandel_q(rho);
    } catch (const UndefinedMandelQError&) {
        r.mandel_q = std::numeric_limits<double>::quiet_NaN();
    }
    r.purity = purity(rho);
    if (target != nullptr) r.fidelity = fidelity_to_pure(rho, *target);
    return r;
}

}  // namespace nldiss
