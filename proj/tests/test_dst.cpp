#include <doctest.h>

#include <cmath>
#include <vector>

#include "svpinn/dst.hpp"
#include "svpinn/math_util.hpp"
#include "svpinn/rng.hpp"
#include "svpinn/spectral_basis.hpp"

using namespace svpinn;

namespace {

std::vector<double> random_field(const GridSpec& grid, std::uint64_t seed) {
    std::vector<double> u(grid.size());
    GaussianStream gs(seed, 0);
    for (auto& v : u) v = gs.next();
    return u;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("dst1 is self-inverse") {
    for (const GridSpec& grid : {GridSpec(1, 127), GridSpec(2, 31), GridSpec(3, 9)}) {
        const std::vector<double> u = random_field(grid, 42);
        Dst1 dst(grid);
        std::vector<double> v = dst.apply(u);
        std::vector<double> w = dst.apply(v);
        CHECK(max_abs_diff(u, w) < 1e-12);
    }
}

TEST_CASE("zeros transform to zeros") {
    const GridSpec grid(2, 15);
    Dst1 dst(grid);
    const std::vector<double> z(grid.size(), 0.0);
    const std::vector<double> out = dst.apply(z);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("fast path agrees with the direct matrix path") {
    for (const GridSpec& grid : {GridSpec(1, 63), GridSpec(1, 96), GridSpec(2, 17), GridSpec(3, 7)}) {
        const std::vector<double> u = random_field(grid, 7);
        Dst1 dst(grid);
        const std::vector<double> fast = dst.apply(u);
        const std::vector<double> direct = dst1_direct(u, grid);
        CHECK(max_abs_diff(fast, direct) < 1e-12);
    }
}

TEST_CASE("transform of a sampled eigenfunction is a scaled unit vector") {
    const GridSpec grid(2, 15);
    const EigenIndex mode(2, 3);
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = evaluate_eigenfunction(mode, grid.node(i));
    Dst1 dst(grid);
    const std::vector<double> uhat = dst.apply(u);
    const double expect = std::pow(grid.h(), -0.5 * grid.d);
    for (std::size_t f = 0; f < uhat.size(); ++f) {
        const auto km = grid.multi_index(f);
        if (km[0] == mode.k[0] && km[1] == mode.k[1])
            CHECK(uhat[f] == doctest::Approx(expect).epsilon(1e-12));
        else
            CHECK(std::abs(uhat[f]) < 1e-10 * expect);
    }
}

TEST_CASE("dst1 diagonalises the discrete negative laplacian") {
    for (const GridSpec& grid : {GridSpec(1, 255), GridSpec(2, 31), GridSpec(3, 11)}) {
        const std::vector<double> u = random_field(grid, 11);
        Dst1 dst(grid);
        const std::vector<double> lhs = dst.apply(apply_neg_laplacian_h(u, grid));
        const std::vector<double> uhat = dst.apply(u);
        const std::vector<double> lam = discrete_eigenvalue_field(grid);
        double scale = 0.0;
        for (std::size_t k = 0; k < lhs.size(); ++k)
            scale = std::max(scale, std::abs(lam[k] * uhat[k]));
        for (std::size_t k = 0; k < lhs.size(); ++k)
            CHECK(std::abs(lhs[k] - lam[k] * uhat[k]) < 1e-10 * scale);
    }
}

TEST_CASE("eigenvalue fields match the per-mode closed forms") {
    const GridSpec grid(2, 9);
    const std::vector<double> lam_h = discrete_eigenvalue_field(grid);
    const std::vector<double> lam = continuum_eigenvalue_field(grid);
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const auto km = grid.multi_index(f);
        const EigenIndex k(km[0], km[1]);
        CHECK(lam_h[f] == doctest::Approx(discrete_eigenvalue(grid, k)).epsilon(1e-14));
        CHECK(lam[f] == doctest::Approx(eigenvalue(k)).epsilon(1e-14));
    }
}

TEST_CASE("size mismatches are rejected") {
    const GridSpec grid(1, 15);
    Dst1 dst(grid);
    std::vector<double> bad(7), out(grid.size());
    CHECK_THROWS_AS(dst.apply(bad, out), std::invalid_argument);
    CHECK_THROWS_AS(dst1_direct(bad, grid), std::invalid_argument);
    CHECK_THROWS_AS(apply_neg_laplacian_h(bad, grid), std::invalid_argument);
}
