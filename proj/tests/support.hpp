#pragma once

#include <random>

#include "nldiss/fock.hpp"

namespace nldiss::test {

inline Matrix random_matrix(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m(i, j) = complex(g(rng), g(rng));
    return m;
}

/// Full-rank random state: G G^dag / Tr.
inline DensityMatrix random_density(int dim, std::mt19937_64& rng)
{
    const Matrix g = random_matrix(dim, rng);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DensityMatrix(FockOperator(rho));
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace nldiss::test
