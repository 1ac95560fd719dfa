#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "svpinn/grid.hpp"
#include "svpinn/net.hpp"

namespace svpinn {

using ScalarField = std::function<double(const Point&)>;

// A manufactured benchmark: operator, closed-form source, boundary data and
// exact solution, plus the collocation/boundary/test point sets.
struct ProblemSpec {
    std::string name;
    int d = 1;
    OperatorSpec op;
    ScalarField f;      // source
    ScalarField g;      // boundary data; null when homogeneous
    ScalarField exact;  // manufactured solution
    bool homogeneous = true;

    GridSpec collocation;
    std::vector<Point> boundary_points;
    std::vector<Point> test_points;

    std::vector<Point> collocation_points() const;
};

// Equispaced points on the boundary of (0,1)^d.
std::vector<Point> boundary_points_unit_cube(int d, std::size_t count);

// Interior grid twice as fine per axis as the collocation grid.
std::vector<Point> test_points_refined(const GridSpec& collocation);

// u = sin(2 pi x) + 0.1 sin(a pi x) - x (sin 2pi + 0.1 sin a pi);  -u'' = f.
ProblemSpec make_experiment1(double a, int n_collocation = 511);

// u = sin(pi x) sin(pi y) [sin(a(x+y)) + sin(2 pi x) + cos(3 pi y)];  -Lap u = f.
ProblemSpec make_experiment2(double a, int n_collocation = 96);

// -div(a grad u) = f with a = 1 + beta sin(ka pi x) sin(ka pi y),
// u = sin(ku pi x) sin(ku pi y).
ProblemSpec make_experiment3(double k_a = 20.0, double k_u = 10.0, double beta = 0.75,
                             int n_collocation = 96);

// Helmholtz: Lap u + k^2 u = f, u = sin(k pi x) sin(k pi y).
ProblemSpec make_experiment4(double k, int n_collocation = 96);

// Inhomogeneous Poisson, u = sum of k^2 Gaussian bumps; soft boundary data g.
ProblemSpec make_experiment5(int k, int n_collocation = 96, std::size_t n_boundary = 604);

// 3D Helmholtz, u = sin(pi x) sin(2 pi y) sin(3 pi z)(x^2+y^2+z^2).
ProblemSpec make_experiment6(double k, int n_collocation = 24);

// Registry addressable as "exp1".."exp6" with a key=value parameter list,
// e.g. make_problem("exp1", {{"a","100"}}).
ProblemSpec make_problem(const std::string& name,
                         const std::vector<std::pair<std::string, std::string>>& args);

}  // namespace svpinn
