#pragma once

#include <span>
#include <vector>

#include "svpinn/grid.hpp"
#include "svpinn/sampler.hpp"

namespace svpinn {

// Pairs (lambda_k, a_k) of eigenvalue and residual pairing coefficient,
// truncated to a caller-chosen mode set; tails are never estimated.
struct SpectralCoefficients {
    std::vector<double> lambda;
    std::vector<double> a;
};

// sum lambda^{-s} a^2.
double dual_norm_sq(const SpectralCoefficients& coeffs, double s);

// tau^2 sum (1+lambda)^{-1} a^2.
double phi_norm_sq_exact(const SpectralCoefficients& coeffs, double tau);

struct EquivalenceBounds {
    double ratio;  // dual_norm_sq(.,1) / phi_norm_sq_exact
    double c;      // inf over the provided modes of (1+lambda)/(tau^2 lambda)
    double C;      // sup of the same
};

// Throws if every coefficient is zero (the ratio is undefined).
EquivalenceBounds equivalence_ratio_bounds(const SpectralCoefficients& coeffs, double tau);

// h^d sum u v; trapezoid value of the integral when both vanish on the
// boundary. Fixed pairwise association order.
double discrete_inner(std::span<const double> u, std::span<const double> v, const GridSpec& grid);

// (L u_theta - f) at the interior nodes.
struct ResidualField {
    GridSpec grid;
    std::vector<double> r;
};

// Row pairings p_j = (1/N_c) sum_i r_i phi_j(x_i).
std::vector<double> batch_pairings(const ResidualField& residual, const TestFunctionBatch& batch);

// (1/N) sum_j p_j^2.
double empirical_phi_loss(const ResidualField& residual, const TestFunctionBatch& batch);

// Naive double-loop evaluation; reference path for the blocked one.
double empirical_phi_loss_serial(const ResidualField& residual, const TestFunctionBatch& batch);

// (n^2 h)^d * empirical_phi_loss.
double corrected_phi_loss(const ResidualField& residual, const TestFunctionBatch& batch);

double correction_factor(const GridSpec& grid);

// Expectation of the corrected loss over fresh batches:
// tau^2 sum_in-band (1+lambda^h_k)^{-1} |<r, phi_k>_h|^2.
double expected_corrected_loss(const ResidualField& residual, double tau);

// (1/N_b) sum (u_b - g_b)^2.
double boundary_penalty(std::span<const double> u_on_boundary, std::span<const double> g_values);

}  // namespace svpinn
