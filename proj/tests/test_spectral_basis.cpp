#include <doctest.h>

#include <cmath>
#include <vector>

#include "svpinn/math_util.hpp"
#include "svpinn/spectral_basis.hpp"

using namespace svpinn;

TEST_CASE("eigenvalues are the closed-form sums") {
    CHECK(eigenvalue(EigenIndex(1)) == doctest::Approx(kPi * kPi).epsilon(1e-14));
    CHECK(eigenvalue(EigenIndex(1, 1)) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-14));
    CHECK(eigenvalue(EigenIndex(1, 2, 3)) == doctest::Approx(14.0 * kPi * kPi).epsilon(1e-14));
    CHECK_THROWS_AS(eigenvalue(EigenIndex(0)), std::invalid_argument);
    CHECK_THROWS_AS(eigenvalue(EigenIndex(2, -1)), std::invalid_argument);
}

TEST_CASE("eigenfunction values and exact boundary zeros") {
    CHECK(evaluate_eigenfunction(EigenIndex(1), {0.5, 0, 0}) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(evaluate_eigenfunction(EigenIndex(1, 1), {0.5, 0.5, 0}) ==
          doctest::Approx(2.0).epsilon(1e-14));
    // Boundary points evaluate to exactly zero, not rounding noise.
    CHECK(evaluate_eigenfunction(EigenIndex(3, 7), {0.0, 0.4, 0}) == 0.0);
    CHECK(evaluate_eigenfunction(EigenIndex(64), {1.0, 0, 0}) == 0.0);
    CHECK(evaluate_eigenfunction(EigenIndex(5, 9, 2), {0.3, 1.0, 0.7}) == 0.0);
}

TEST_CASE("discrete eigenvalues") {
    // n = 1, h = 1/2: 16 sin^2(pi/4) = 8.
    CHECK(discrete_eigenvalue(GridSpec(1, 1), EigenIndex(1)) == doctest::Approx(8.0).epsilon(1e-13));
    // n = 3, h = 1/4: 64 sin^2(pi/8), off pi^2 by about (h^2/12) lambda^2.
    const double lam_h = discrete_eigenvalue(GridSpec(1, 3), EigenIndex(1));
    const double ref = 64.0 * sq(std::sin(kPi / 8.0));
    CHECK(lam_h == doctest::Approx(ref).epsilon(1e-13));
    const double gap = kPi * kPi - lam_h;
    const double leading = sq(0.25) / 12.0 * sq(kPi * kPi);
    CHECK(gap == doctest::Approx(leading).epsilon(0.05));

    CHECK_THROWS_AS(discrete_eigenvalue(GridSpec(1, 3), EigenIndex(4)), std::out_of_range);
}

TEST_CASE("discrete eigenvalue converges at second order and from below") {
    for (const EigenIndex& k : {EigenIndex(1), EigenIndex(3)}) {
        std::vector<double> lh, le;
        for (int n : {15, 31, 63, 127, 255}) {
            const GridSpec grid(1, n);
            const double err = eigenvalue(k) - discrete_eigenvalue(grid, k);
            CHECK(err > 0.0);  // lambda_h <= lambda, strictly for k in band
            lh.push_back(std::log(grid.h()));
            le.push_back(std::log(err));
        }
        CHECK(ols_slope(lh, le) == doctest::Approx(2.0).epsilon(0.05));
    }
    // From below also in higher dimensions.
    for (int n : {7, 15}) {
        const GridSpec g2(2, n);
        for (int k1 = 1; k1 <= n; k1 += 3)
            for (int k2 = 1; k2 <= n; k2 += 3)
                CHECK(discrete_eigenvalue(g2, EigenIndex(k1, k2)) <= eigenvalue(EigenIndex(k1, k2)));
    }
}

TEST_CASE("daff index selection orders by eigenvalue with lexicographic ties") {
    const auto one = select_daff_indices(1, 3, 64);
    REQUIRE(one.size() == 3);
    CHECK(one[0] == EigenIndex(1));
    CHECK(one[1] == EigenIndex(2));
    CHECK(one[2] == EigenIndex(3));

    const auto two = select_daff_indices(2, 4, 64);
    REQUIRE(two.size() == 4);
    CHECK(two[0] == EigenIndex(1, 1));
    CHECK(two[1] == EigenIndex(1, 2));
    CHECK(two[2] == EigenIndex(2, 1));
    CHECK(two[3] == EigenIndex(2, 2));

    const auto tiny = select_daff_indices(2, 1, 1);
    CHECK(tiny[0] == EigenIndex(1, 1));

    CHECK_THROWS_AS(select_daff_indices(2, 2, 1), std::invalid_argument);
}

TEST_CASE("basis ordering is nondecreasing and quadrature-orthonormal") {
    const EigenBasis b1 = EigenBasis::lowest_modes(1, 10, 64);
    for (std::size_t i = 0; i + 1 < b1.size(); ++i) CHECK(b1.lambda(i) <= b1.lambda(i + 1));

    // Fine-grid trapezoid of <phi_i, phi_j> against delta_ij.
    const GridSpec fine1(1, 4095);
    for (std::size_t i = 0; i < b1.size(); ++i)
        for (std::size_t j = i; j < b1.size(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < fine1.size(); ++p) {
                const auto x = fine1.node(p);
                s += b1.evaluate(i, x) * b1.evaluate(j, x);
            }
            s *= fine1.h();
            CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) < 1e-6);
        }

    const EigenBasis b2 = EigenBasis::lowest_modes(2, 10, 64);
    const GridSpec fine2(2, 511);
    for (std::size_t i = 0; i < b2.size(); ++i)
        for (std::size_t j = i; j < b2.size(); ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < fine2.size(); ++p) {
                const auto x = fine2.node(p);
                s += b2.evaluate(i, x) * b2.evaluate(j, x);
            }
            s *= fine2.h() * fine2.h();
            CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) < 1e-4);
        }
}

TEST_CASE("weyl ratios stay positive and bounded") {
    for (int d = 1; d <= 3; ++d) {
        const EigenBasis basis = EigenBasis::lowest_modes(d, 400, d == 1 ? 400 : 30);
        double lo = 1e300, hi = 0.0;
        for (std::size_t rank = 0; rank < basis.size(); ++rank) {
            const double ratio =
                basis.lambda(rank) / std::pow(static_cast<double>(rank + 1), 2.0 / d);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        CHECK(lo > 0.0);
        CHECK(std::isfinite(hi));
        CHECK(hi / lo < 20.0);
    }
}
