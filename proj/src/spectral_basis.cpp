#include "svpinn/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "svpinn/math_util.hpp"

namespace svpinn {

double eigenvalue(const EigenIndex& k) {
    double s = 0.0;
    for (int j = 0; j < k.d; ++j) {
        const int kj = k.k[static_cast<std::size_t>(j)];
        if (kj < 1) throw std::invalid_argument("eigenvalue: index components must be >= 1");
        s += static_cast<double>(kj) * static_cast<double>(kj);
    }
    return kPi * kPi * s;
}

double evaluate_eigenfunction(const EigenIndex& k, const std::array<double, 3>& x) {
    double v = std::pow(2.0, 0.5 * k.d);
    for (int j = 0; j < k.d; ++j) {
        const int kj = k.k[static_cast<std::size_t>(j)];
        if (kj < 1) throw std::invalid_argument("evaluate_eigenfunction: index components must be >= 1");
        v *= sin_pi(kj * x[static_cast<std::size_t>(j)]);
    }
    return v;
}

double discrete_eigenvalue(const GridSpec& grid, const EigenIndex& k) {
    if (k.d != grid.d) throw std::invalid_argument("discrete_eigenvalue: dimension mismatch");
    const double h = grid.h();
    double s = 0.0;
    for (int j = 0; j < k.d; ++j) {
        const int kj = k.k[static_cast<std::size_t>(j)];
        if (kj < 1) throw std::invalid_argument("discrete_eigenvalue: index components must be >= 1");
        if (kj > grid.n) throw std::out_of_range("discrete_eigenvalue: component exceeds grid band");
        s += sq(sin_pi(0.5 * kj * h));
    }
    return 4.0 / (h * h) * s;
}

std::vector<EigenIndex> select_daff_indices(int d, int m, int max_component) {
    if (d < 1 || d > 3) throw std::invalid_argument("select_daff_indices: d must be 1..3");
    std::size_t avail = 1;
    for (int j = 0; j < d; ++j) avail *= static_cast<std::size_t>(max_component);
    if (m < 1 || static_cast<std::size_t>(m) > avail)
        throw std::invalid_argument("select_daff_indices: m exceeds available indices");

    std::vector<EigenIndex> all;
    all.reserve(avail);
    if (d == 1) {
        for (int k1 = 1; k1 <= max_component; ++k1) all.emplace_back(k1);
    } else if (d == 2) {
        for (int k1 = 1; k1 <= max_component; ++k1)
            for (int k2 = 1; k2 <= max_component; ++k2) all.emplace_back(k1, k2);
    } else {
        for (int k1 = 1; k1 <= max_component; ++k1)
            for (int k2 = 1; k2 <= max_component; ++k2)
                for (int k3 = 1; k3 <= max_component; ++k3) all.emplace_back(k1, k2, k3);
    }
    // Sort by eigenvalue; lexicographic order of k breaks degeneracies.
    std::stable_sort(all.begin(), all.end(), [](const EigenIndex& a, const EigenIndex& b) {
        const double la = eigenvalue(a), lb = eigenvalue(b);
        if (la != lb) return la < lb;
        return a.k < b.k;
    });
    all.resize(static_cast<std::size_t>(m));
    return all;
}

EigenBasis::EigenBasis(int d_, std::vector<EigenIndex> idx) : d(d_), indices(std::move(idx)) {
    for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
        if (eigenvalue(indices[i]) > eigenvalue(indices[i + 1]))
            throw std::invalid_argument("EigenBasis: eigenvalues must be nondecreasing");
    }
}

EigenBasis EigenBasis::lowest_modes(int d, int count, int max_component) {
    return EigenBasis(d, select_daff_indices(d, count, max_component));
}

}  // namespace svpinn
