#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace svpinn {

inline constexpr double kPi = 3.14159265358979323846;

// sin(pi*t) with exact zeros at integer t. Argument reduction on t is exact
// in binary arithmetic, so eigenfunctions vanish identically on the boundary
// of the unit cube instead of leaving O(k*eps) residue from sin(k*pi).
inline double sin_pi(double t) {
    double r = std::remainder(t, 2.0);  // r in [-1, 1]
    if (r > 0.5) {
        r = 1.0 - r;
    } else if (r < -0.5) {
        r = -1.0 - r;
    }
    return std::sin(kPi * r);
}

inline double cos_pi(double t) {
    // cos(pi*t) = sin(pi*(t + 1/2)); reuse the reduced form.
    return sin_pi(t + 0.5);
}

inline double sq(double x) { return x * x; }

// Pairwise (cascade) summation with a fixed association order. Used for the
// long reductions so that results do not depend on thread count and carry
// O(log n) rounding growth instead of O(n).
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(std::span<const double> x) {
    return pairwise_sum(x.data(), x.size());
}

// Least-squares slope of y against x (used for log-log rate fits).
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

}  // namespace svpinn
