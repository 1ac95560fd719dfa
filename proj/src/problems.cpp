#include "svpinn/problems.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "svpinn/math_util.hpp"

namespace svpinn {

std::vector<Point> ProblemSpec::collocation_points() const {
    std::vector<Point> pts(collocation.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = collocation.node(i);
    return pts;
}

std::vector<Point> boundary_points_unit_cube(int d, std::size_t count) {
    std::vector<Point> pts;
    if (d == 1) {
        pts.push_back({0.0, 0.0, 0.0});
        pts.push_back({1.0, 0.0, 0.0});
        return pts;
    }
    if (d == 2) {
        // Walk the perimeter at equal arc length; corners land exactly.
        pts.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double t = 4.0 * static_cast<double>(i) / static_cast<double>(count);
            Point p{0.0, 0.0, 0.0};
            if (t < 1.0) {
                p = {t, 0.0, 0.0};
            } else if (t < 2.0) {
                p = {1.0, t - 1.0, 0.0};
            } else if (t < 3.0) {
                p = {3.0 - t, 1.0, 0.0};
            } else {
                p = {0.0, 4.0 - t, 0.0};
            }
            pts.push_back(p);
        }
        return pts;
    }
    // d == 3: a per-face lattice with about count/6 points per face.
    const std::size_t per_face = std::max<std::size_t>(count / 6, 1);
    const std::size_t side = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(per_face))));
    for (int face = 0; face < 6; ++face) {
        const int axis = face / 2;
        const double val = (face % 2 == 0) ? 0.0 : 1.0;
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) {
                const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(side);
                const double v = (static_cast<double>(j) + 0.5) / static_cast<double>(side);
                Point p{0.0, 0.0, 0.0};
                p[static_cast<std::size_t>(axis)] = val;
                p[static_cast<std::size_t>((axis + 1) % 3)] = u;
                p[static_cast<std::size_t>((axis + 2) % 3)] = v;
                pts.push_back(p);
            }
    }
    return pts;
}

std::vector<Point> test_points_refined(const GridSpec& collocation) {
    // Mesh width exactly halved: n_test = 2(n+1) - 1.
    GridSpec fine(collocation.d, 2 * (collocation.n + 1) - 1);
    std::vector<Point> pts(fine.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = fine.node(i);
    return pts;
}

namespace {

ProblemSpec base_problem(std::string name, int d, int n_collocation) {
    ProblemSpec p;
    p.name = std::move(name);
    p.d = d;
    p.collocation = GridSpec(d, n_collocation);
    p.test_points = test_points_refined(p.collocation);
    return p;
}

}  // namespace

ProblemSpec make_experiment1(double a, int n_collocation) {
    if (a <= 0.0) throw std::invalid_argument("make_experiment1: a must be positive");
    ProblemSpec p = base_problem("exp1", 1, n_collocation);
    const double corr = std::sin(2.0 * kPi) + 0.1 * std::sin(a * kPi);
    p.op.kind = OperatorSpec::Kind::NegLaplacian;
    p.op.d = 1;
    p.exact = [a, corr](const Point& x) {
        return sin_pi(2.0 * x[0]) + 0.1 * std::sin(a * kPi * x[0]) - x[0] * corr;
    };
    // -u'' of the solution above; the linear corrector drops out.
    p.f = [a](const Point& x) {
        return 4.0 * kPi * kPi * sin_pi(2.0 * x[0]) +
               0.1 * sq(a * kPi) * std::sin(a * kPi * x[0]);
    };
    p.homogeneous = true;
    p.boundary_points = boundary_points_unit_cube(1, 2);
    return p;
}

ProblemSpec make_experiment2(double a, int n_collocation) {
    ProblemSpec p = base_problem("exp2", 2, n_collocation);
    p.op.kind = OperatorSpec::Kind::NegLaplacian;
    p.op.d = 2;
    auto S = [](const Point& x) { return sin_pi(x[0]) * sin_pi(x[1]); };
    auto B = [a](const Point& x) {
        return std::sin(a * (x[0] + x[1])) + sin_pi(2.0 * x[0]) + cos_pi(3.0 * x[1]);
    };
    p.exact = [S, B](const Point& x) { return S(x) * B(x); };
    // f = -Lap(S B) = 2 pi^2 S B - 2 grad S . grad B - S Lap B, all closed form.
    p.f = [a, S, B](const Point& x) {
        const double s = S(x);
        const double b = B(x);
        const double sx = kPi * cos_pi(x[0]) * sin_pi(x[1]);
        const double sy = kPi * sin_pi(x[0]) * cos_pi(x[1]);
        const double ca = a * std::cos(a * (x[0] + x[1]));
        const double bx = ca + 2.0 * kPi * cos_pi(2.0 * x[0]);
        const double by = ca - 3.0 * kPi * sin_pi(3.0 * x[1]);
        const double lap_b = -2.0 * a * a * std::sin(a * (x[0] + x[1])) -
                             4.0 * kPi * kPi * sin_pi(2.0 * x[0]) -
                             9.0 * kPi * kPi * cos_pi(3.0 * x[1]);
        return 2.0 * kPi * kPi * s * b - 2.0 * (sx * bx + sy * by) - s * lap_b;
    };
    p.homogeneous = true;
    p.boundary_points = boundary_points_unit_cube(2, 256);
    return p;
}

ProblemSpec make_experiment3(double k_a, double k_u, double beta, int n_collocation) {
    if (std::abs(beta) >= 1.0)
        throw std::invalid_argument("make_experiment3: |beta| must be < 1 for ellipticity");
    ProblemSpec p = base_problem("exp3", 2, n_collocation);
    p.op.kind = OperatorSpec::Kind::DivergenceForm;
    p.op.d = 2;
    p.op.a = [k_a, beta](const Point& x) {
        return 1.0 + beta * sin_pi(k_a * x[0]) * sin_pi(k_a * x[1]);
    };
    p.op.grad_a = [k_a, beta](const Point& x) -> Point {
        return {beta * k_a * kPi * cos_pi(k_a * x[0]) * sin_pi(k_a * x[1]),
                beta * k_a * kPi * sin_pi(k_a * x[0]) * cos_pi(k_a * x[1]), 0.0};
    };
    p.exact = [k_u](const Point& x) { return sin_pi(k_u * x[0]) * sin_pi(k_u * x[1]); };
    // f = -a Lap u - grad a . grad u with Lap u = -2 (ku pi)^2 u.
    p.f = [k_a, k_u, beta, a_fn = p.op.a, ga_fn = p.op.grad_a](const Point& x) {
        const double u = sin_pi(k_u * x[0]) * sin_pi(k_u * x[1]);
        const double ux = k_u * kPi * cos_pi(k_u * x[0]) * sin_pi(k_u * x[1]);
        const double uy = k_u * kPi * sin_pi(k_u * x[0]) * cos_pi(k_u * x[1]);
        const auto ga = ga_fn(x);
        return 2.0 * sq(k_u * kPi) * a_fn(x) * u - (ga[0] * ux + ga[1] * uy);
    };
    p.homogeneous = true;
    p.boundary_points = boundary_points_unit_cube(2, 256);
    return p;
}

ProblemSpec make_experiment4(double k, int n_collocation) {
    if (k <= 0.0) throw std::invalid_argument("make_experiment4: k must be positive");
    ProblemSpec p = base_problem("exp4", 2, n_collocation);
    p.op.kind = OperatorSpec::Kind::Helmholtz;
    p.op.d = 2;
    p.op.k = k;
    p.exact = [k](const Point& x) { return sin_pi(k * x[0]) * sin_pi(k * x[1]); };
    p.f = [k](const Point& x) {
        return (k * k - 2.0 * sq(k * kPi)) * sin_pi(k * x[0]) * sin_pi(k * x[1]);
    };
    p.homogeneous = true;
    p.boundary_points = boundary_points_unit_cube(2, 256);
    return p;
}

ProblemSpec make_experiment5(int k, int n_collocation, std::size_t n_boundary) {
    if (k < 1) throw std::invalid_argument("make_experiment5: k must be >= 1");
    ProblemSpec p = base_problem("exp5", 2, n_collocation);
    p.op.kind = OperatorSpec::Kind::NegLaplacian;
    p.op.d = 2;
    auto u = [k](const Point& x) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i)
            for (int j = 1; j <= k; ++j) {
                const double dx = x[0] - static_cast<double>(i) / (k + 1);
                const double dy = x[1] - static_cast<double>(j) / (k + 1);
                s += std::exp(-50.0 * (dx * dx + dy * dy));
            }
        return s;
    };
    p.exact = u;
    // -Lap of one bump is 100 (2 - 100 rho^2) bump.
    p.f = [k](const Point& x) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i)
            for (int j = 1; j <= k; ++j) {
                const double dx = x[0] - static_cast<double>(i) / (k + 1);
                const double dy = x[1] - static_cast<double>(j) / (k + 1);
                const double rho2 = dx * dx + dy * dy;
                s += 100.0 * (2.0 - 100.0 * rho2) * std::exp(-50.0 * rho2);
            }
        return s;
    };
    p.g = u;
    p.homogeneous = false;
    p.boundary_points = boundary_points_unit_cube(2, n_boundary);
    return p;
}

ProblemSpec make_experiment6(double k, int n_collocation) {
    if (k <= 0.0) throw std::invalid_argument("make_experiment6: k must be positive");
    ProblemSpec p = base_problem("exp6", 3, n_collocation);
    p.op.kind = OperatorSpec::Kind::Helmholtz;
    p.op.d = 3;
    p.op.k = k;
    auto S = [](const Point& x) { return sin_pi(x[0]) * sin_pi(2.0 * x[1]) * sin_pi(3.0 * x[2]); };
    auto P = [](const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; };
    p.exact = [S, P](const Point& x) { return S(x) * P(x); };
    // Lap(SP) = P Lap S + 2 grad S . grad P + 6 S, Lap S = -14 pi^2 S.
    p.f = [k, S, P](const Point& x) {
        const double s = S(x);
        const double pp = P(x);
        const double gx = kPi * cos_pi(x[0]) * sin_pi(2.0 * x[1]) * sin_pi(3.0 * x[2]);
        const double gy = 2.0 * kPi * sin_pi(x[0]) * cos_pi(2.0 * x[1]) * sin_pi(3.0 * x[2]);
        const double gz = 3.0 * kPi * sin_pi(x[0]) * sin_pi(2.0 * x[1]) * cos_pi(3.0 * x[2]);
        const double lap = -14.0 * kPi * kPi * s * pp +
                           2.0 * (gx * 2.0 * x[0] + gy * 2.0 * x[1] + gz * 2.0 * x[2]) + 6.0 * s;
        return lap + k * k * s * pp;
    };
    p.homogeneous = true;
    p.boundary_points = boundary_points_unit_cube(3, 600);
    return p;
}

ProblemSpec make_problem(const std::string& name,
                         const std::vector<std::pair<std::string, std::string>>& args) {
    auto get = [&args](const std::string& key, double fallback) {
        for (const auto& [k, v] : args)
            if (k == key) return std::atof(v.c_str());
        return fallback;
    };
    auto geti = [&get](const std::string& key, int fallback) {
        return static_cast<int>(get(key, fallback));
    };
    if (name == "exp1") return make_experiment1(get("a", 1.0), geti("n", 511));
    if (name == "exp2") return make_experiment2(get("a", 1.0), geti("n", 96));
    if (name == "exp3")
        return make_experiment3(get("ka", 20.0), get("ku", 10.0), get("beta", 0.75), geti("n", 96));
    if (name == "exp4") return make_experiment4(get("k", 5.0), geti("n", 96));
    if (name == "exp5")
        return make_experiment5(geti("k", 1), geti("n", 96),
                                static_cast<std::size_t>(geti("nb", 604)));
    if (name == "exp6") return make_experiment6(get("k", 100.0), geti("n", 24));
    throw std::invalid_argument("make_problem: unknown experiment '" + name + "'");
}

}  // namespace svpinn
