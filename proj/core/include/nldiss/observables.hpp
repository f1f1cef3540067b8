#pragma once

#include <optional>

#include "nldiss/distribution.hpp"
#include "nldiss/fock.hpp"

namespace nldiss {

struct ObservableReport {
    double mean_n = 0.0;
    double variance_n = 0.0;
    double mandel_q = 0.0;  // NaN for the vacuum
    double purity = 0.0;
    std::optional<double> fidelity;
    DiagonalDistribution distribution;
};

/// (<n^2> - <n>^2)/<n> - 1 from the diagonal of rho.
double mandel_q(const DensityMatrix& rho);

/// <phi|rho|phi>
double fidelity_to_pure(const DensityMatrix& rho, const StateVector& phi);

/// Diagonal of rho; entries down to -1e-10 are clipped to zero and the
/// result renormalized. Throws CorruptedStateError for larger negative
/// entries or when less than 0.999 of the mass remains.
DiagonalDistribution photon_distribution(const DensityMatrix& rho);

/// Tr rho^2
double purity(const DensityMatrix& rho);

/// (1/2) sum |eig(rho - sigma)|
double trace_distance(const Matrix& rho, const Matrix& sigma);
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

ObservableReport observe(const DensityMatrix& rho, const StateVector* target = nullptr);

}  // namespace nldiss
