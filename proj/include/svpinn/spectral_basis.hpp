#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "svpinn/grid.hpp"

namespace svpinn {

// Mode numbers of a Dirichlet-Laplacian eigenpair on (0,1)^d; every
// component is >= 1.
struct EigenIndex {
    int d = 1;
    std::array<int, 3> k{1, 1, 1};

    EigenIndex() = default;
    EigenIndex(int k1) : d(1), k{k1, 1, 1} {}
    EigenIndex(int k1, int k2) : d(2), k{k1, k2, 1} {}
    EigenIndex(int k1, int k2, int k3) : d(3), k{k1, k2, k3} {}

    bool operator==(const EigenIndex& o) const {
        if (d != o.d) return false;
        for (int j = 0; j < d; ++j)
            if (k[static_cast<std::size_t>(j)] != o.k[static_cast<std::size_t>(j)]) return false;
        return true;
    }
};

// lambda_k = pi^2 * sum_j k_j^2. Throws on non-positive components.
double eigenvalue(const EigenIndex& k);

// phi_k(x) = 2^{d/2} prod_j sin(k_j pi x_j); exactly zero whenever some x_j
// is an integer, so boundary nodes evaluate to 0.0 and not to rounding noise.
double evaluate_eigenfunction(const EigenIndex& k, const std::array<double, 3>& x);

// Eigenvalue of the second-difference Laplacian on the grid:
// (4/h^2) sum_j sin^2(pi k_j h / 2). Requires 1 <= k_j <= n.
double discrete_eigenvalue(const GridSpec& grid, const EigenIndex& k);

// The m indices with smallest eigenvalue among {k : 1 <= k_j <= max_component},
// ties broken lexicographically so feature layers are reproducible.
std::vector<EigenIndex> select_daff_indices(int d, int m, int max_component);

// Indexed eigenpairs with nondecreasing eigenvalues along the stored order.
struct EigenBasis {
    int d = 1;
    std::vector<EigenIndex> indices;

    EigenBasis(int d_, std::vector<EigenIndex> idx);

    // First `count` modes within per-axis band `max_component`.
    static EigenBasis lowest_modes(int d, int count, int max_component);

    std::size_t size() const { return indices.size(); }
    double lambda(std::size_t i) const { return eigenvalue(indices[i]); }
    double evaluate(std::size_t i, const std::array<double, 3>& x) const {
        return evaluate_eigenfunction(indices[i], x);
    }
};

}  // namespace svpinn
