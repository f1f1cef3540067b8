#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nldiss {

/// Photon-number distribution p_0..p_{dim-1}; nonnegative and normalized.
class DiagonalDistribution {
public:
    /// Normalizes `weights`. Throws CorruptedStateError on negative,
    /// non-finite or all-zero input.
    explicit DiagonalDistribution(std::vector<double> weights);

    /// Poisson(mean) truncated to `dim` entries and renormalized.
    static DiagonalDistribution poisson(double mean, int dim);

    int dim() const noexcept { return static_cast<int>(p_.size()); }
    double operator[](int n) const { return p_[static_cast<std::size_t>(n)]; }
    std::span<const double> probabilities() const noexcept { return p_; }

    double mean() const;
    double variance() const;
    /// Var(n)/<n> - 1; throws UndefinedMandelQError when <n> = 0.
    double mandel_q() const;

private:
    std::vector<double> p_;
};

/// Q from first and second moments; shared by every caller so the vacuum
/// rule is applied identically.
double mandel_q_from_moments(double mean, double second_moment);

}  // namespace nldiss
