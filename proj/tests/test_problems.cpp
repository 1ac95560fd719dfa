#include <doctest.h>

#include <cmath>
#include <vector>

#include "svpinn/math_util.hpp"
#include "svpinn/problems.hpp"
#include "svpinn/rng.hpp"

using namespace svpinn;

namespace {

// Independent consistency oracle: five-point finite differences of the exact
// solution assembled through the problem's own operator. The step must be
// small against the solution's oscillation scale.
EvalJet fd_jet(const ScalarField& u, const Point& x, int d, double h) {
    EvalJet j;
    j.value = u(x);
    for (int a = 0; a < d; ++a) {
        auto at = [&](double dx) {
            Point y = x;
            y[static_cast<std::size_t>(a)] += dx;
            return u(y);
        };
        const double fm2 = at(-2 * h), fm1 = at(-h), fp1 = at(h), fp2 = at(2 * h);
        j.grad[static_cast<std::size_t>(a)] = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
        j.second[static_cast<std::size_t>(a)] =
            (-fm2 + 16 * fm1 - 30 * j.value + 16 * fp1 - fp2) / (12 * h * h);
    }
    return j;
}

void check_consistency(const ProblemSpec& p, std::uint64_t seed, int points = 200,
                       double fd_h = 1e-3) {
    double fmax = 0.0;
    std::vector<Point> pts(static_cast<std::size_t>(points), {0, 0, 0});
    SplitMix64 rng(seed);
    for (auto& x : pts)
        for (int a = 0; a < p.d; ++a)
            x[static_cast<std::size_t>(a)] = 0.01 + 0.98 * rng.next_unit();
    for (const auto& x : pts) fmax = std::max(fmax, std::abs(p.f(x)));
    for (const auto& x : pts) {
        const EvalJet j = fd_jet(p.exact, x, p.d, fd_h);
        const double lu = apply_operator(p.op, j, x);
        CHECK(std::abs(lu - p.f(x)) < 1e-8 * (1.0 + fmax));
    }
}

void check_homogeneous_boundary(const ProblemSpec& p, int count = 1000) {
    const auto pts = boundary_points_unit_cube(p.d, static_cast<std::size_t>(count));
    for (const auto& x : pts) CHECK(std::abs(p.exact(x)) < 1e-12);
}

}  // namespace

TEST_CASE("experiment 1: multi-scale 1D Poisson") {
    const ProblemSpec p1 = make_experiment1(1.0, 63);
    CHECK(p1.exact({0.5, 0, 0}) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(p1.exact({0.0, 0, 0})) < 1e-15);
    CHECK(std::abs(p1.exact({1.0, 0, 0})) < 1e-15);
    check_consistency(p1, 100);

    const ProblemSpec p100 = make_experiment1(100.0, 63);
    CHECK(std::abs(p100.exact({0.0, 0, 0})) < 1e-13);
    CHECK(std::abs(p100.exact({1.0, 0, 0})) < 1e-13);
    check_consistency(p100, 101, 200, 5e-5);
}

TEST_CASE("experiment 2: multi-scale 2D Poisson") {
    const ProblemSpec p = make_experiment2(1.0, 31);
    CHECK(p.exact({0.5, 0.5, 0}) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    check_homogeneous_boundary(p);
    check_consistency(p, 102);
    check_consistency(make_experiment2(25.0, 31), 103, 200, 5e-4);
}

TEST_CASE("experiment 3: oscillating divergence form") {
    const ProblemSpec p = make_experiment3(20.0, 10.0, 0.75, 31);
    // Coercivity floor of the coefficient.
    SplitMix64 rng(5);
    for (int t = 0; t < 500; ++t) {
        const Point x{rng.next_unit(), rng.next_unit(), 0};
        CHECK(p.op.a(x) >= 1.0 - 0.75 - 1e-12);
    }
    check_homogeneous_boundary(p);
    check_consistency(p, 104, 200, 5e-4);

    // beta = 0 reduces to plain Poisson: f = 2 (ku pi)^2 u.
    const ProblemSpec flat = make_experiment3(20.0, 10.0, 0.0, 31);
    for (int t = 0; t < 100; ++t) {
        const Point x{rng.next_unit(), rng.next_unit(), 0};
        CHECK(flat.f(x) ==
              doctest::Approx(2.0 * sq(10.0 * kPi) * flat.exact(x)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(make_experiment3(20.0, 10.0, 1.0, 31), std::invalid_argument);
}

TEST_CASE("experiment 4: indefinite Helmholtz") {
    const ProblemSpec p = make_experiment4(5.0, 31);
    // f = (k^2 - 2 k^2 pi^2) u with a negative coefficient: signs flip.
    const double coeff = 25.0 - 2.0 * 25.0 * kPi * kPi;
    CHECK(coeff < 0.0);
    SplitMix64 rng(6);
    for (int t = 0; t < 100; ++t) {
        const Point x{rng.next_unit(), rng.next_unit(), 0};
        CHECK(p.f(x) == doctest::Approx(coeff * p.exact(x)).epsilon(1e-10));
    }
    check_homogeneous_boundary(p);
    check_consistency(p, 105);
}

TEST_CASE("experiment 5: Gaussian bumps with boundary data") {
    const ProblemSpec p = make_experiment5(1, 31, 604);
    CHECK(p.exact({0.5, 0.5, 0}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(!p.homogeneous);
    CHECK(p.boundary_points.size() == 604);
    CHECK(p.g({0.0, 0.5, 0}) == doctest::Approx(std::exp(-50.0 * 0.25)).epsilon(1e-12));
    // Boundary data is strictly positive: the problem is genuinely inhomogeneous.
    for (const auto& x : p.boundary_points) CHECK(p.g(x) > 0.0);
    check_consistency(p, 106);
    check_consistency(make_experiment5(3, 31, 604), 107);
}

TEST_CASE("experiment 6: 3D Helmholtz") {
    const ProblemSpec p = make_experiment6(100.0, 15);
    check_homogeneous_boundary(p);
    check_consistency(p, 108);
}

TEST_CASE("registry resolves names and parameters") {
    const ProblemSpec p = make_problem("exp1", {{"a", "100"}, {"n", "63"}});
    CHECK(p.collocation.n == 63);
    CHECK(p.d == 1);
    const ProblemSpec q = make_problem("exp4", {{"k", "10"}});
    CHECK(q.op.k == doctest::Approx(10.0));
    CHECK_THROWS_AS(make_problem("exp9", {}), std::invalid_argument);
}

TEST_CASE("test grids halve the mesh width") {
    const ProblemSpec p = make_experiment1(1.0, 31);
    CHECK(p.test_points.size() == 63);  // 2(n+1)-1
    const ProblemSpec q = make_experiment2(1.0, 15);
    CHECK(q.test_points.size() == 31 * 31);
}
