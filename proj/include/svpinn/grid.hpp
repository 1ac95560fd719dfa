#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

namespace svpinn {

using Point = std::array<double, 3>;

// Interior grid of the unit cube: n nodes per axis at x = k*h, k = 1..n,
// h = 1/(n+1). Nodes are ordered row-major over (k_1,...,k_d); every module
// shares this ordering.
struct GridSpec {
    int d = 1;
    int n = 1;

    GridSpec() = default;
    GridSpec(int d_, int n_) : d(d_), n(n_) {
        if (d < 1 || d > 3) throw std::invalid_argument("GridSpec: d must be 1..3");
        if (n < 1) throw std::invalid_argument("GridSpec: n must be >= 1");
    }

    double h() const { return 1.0 / (n + 1); }

    std::size_t size() const {
        std::size_t s = 1;
        for (int j = 0; j < d; ++j) s *= static_cast<std::size_t>(n);
        return s;
    }

    // Multi-index (1-based per axis) of the flat node id.
    std::array<int, 3> multi_index(std::size_t flat) const {
        std::array<int, 3> k{1, 1, 1};
        for (int j = d - 1; j >= 0; --j) {
            k[static_cast<std::size_t>(j)] = static_cast<int>(flat % n) + 1;
            flat /= static_cast<std::size_t>(n);
        }
        return k;
    }

    std::size_t flat_index(const std::array<int, 3>& k) const {
        std::size_t f = 0;
        for (int j = 0; j < d; ++j) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(k[static_cast<std::size_t>(j)] - 1);
        return f;
    }

    std::array<double, 3> node(std::size_t flat) const {
        const auto k = multi_index(flat);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = k[static_cast<std::size_t>(j)] * h();
        return x;
    }

    bool operator==(const GridSpec& o) const { return d == o.d && n == o.n; }
};

}  // namespace svpinn
