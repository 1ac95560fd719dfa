#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svpinn/dst.hpp"
#include "svpinn/grid.hpp"
#include "svpinn/spectral_basis.hpp"

namespace svpinn {

// N sampled rough test functions on the interior grid, row j = one draw
// evaluated at all nodes in the shared ordering. Immutable after creation;
// identical (grid, tau, seed, N) reproduce bit-for-bit.
struct TestFunctionBatch {
    GridSpec grid;
    double tau = 1.0;
    std::uint64_t seed = 0;
    std::size_t rows = 0;
    std::vector<double> values;  // rows * grid.size(), row-major

    std::span<const double> row(std::size_t j) const {
        return {values.data() + j * grid.size(), grid.size()};
    }
    std::span<double> row(std::size_t j) {
        return {values.data() + j * grid.size(), grid.size()};
    }
};

// Nodal white noise; one standard Gaussian per grid node.
struct NoiseField {
    GridSpec grid;
    std::vector<double> w;
};

NoiseField sample_noise(const GridSpec& grid, std::uint64_t seed, std::uint64_t row);

// Draws each row by transforming nodal noise: scale the spectrum of the noise
// by tau (1 + lambda^{(h)}_k)^{-1/2} and transform back. Rows are independent
// streams, so sampling parallelises without changing results.
TestFunctionBatch sample_wm_batch(const GridSpec& grid, double tau, std::size_t N,
                                  std::uint64_t seed);

// Spectral-side noise of row j (the transformed nodal noise). The grid-space
// row equals dst1(tau (1+lambda^h)^{-1/2} * this), which some studies exploit
// to pair rows against a fixed residual without materialising them.
std::vector<double> spectral_noise_for_row(const Dst1& dst, std::uint64_t seed, std::uint64_t row);

// Independent draws of the truncated expansion: coef[j][m] is the coefficient
// of mode m in draw j, i.e. tau (1+lambda_m)^{-1/2} w_{j,m}.
struct SpectralDraws {
    std::vector<double> lambda;  // per mode
    std::size_t rows = 0;
    std::vector<double> coef;  // rows * lambda.size(), row-major

    std::span<const double> row(std::size_t j) const {
        return {coef.data() + j * lambda.size(), lambda.size()};
    }
};

SpectralDraws sample_spectral_coefficients(std::span<const double> lambda, double tau,
                                           std::size_t N, std::uint64_t seed);

// Rows of the truncated expansion evaluated at arbitrary points; independent
// of the transform path and used as its cross-check.
std::vector<double> evaluate_spectral_draws(const SpectralDraws& draws, const EigenBasis& basis,
                                            std::span<const std::array<double, 3>> points);

std::vector<double> sample_truncated_spectral(const EigenBasis& basis, double tau,
                                              std::span<const std::array<double, 3>> points,
                                              std::size_t N, std::uint64_t seed);

// sum_m lambda_m^t coef_m^2 over the first `modes` coefficients of one draw.
double partial_sum_sobolev_norm(std::span<const double> lambda, std::span<const double> coef,
                                double t, std::size_t modes);

// Pointwise variance of the discretised process at node `flat`:
// tau^2 h^d sum_k (1+lambda^h_k)^{-1} phi_k(x)^2.
double wm_pointwise_variance(const GridSpec& grid, double tau, std::size_t flat);
double wm_pointwise_covariance(const GridSpec& grid, double tau, std::size_t flat_a,
                               std::size_t flat_b);

// Flat binary batch file: d, n, N as int64, tau as binary64, seed as int64,
// all little-endian, then the row-major payload.
void save_batch(const TestFunctionBatch& batch, const std::string& path);
TestFunctionBatch load_batch(const std::string& path);

}  // namespace svpinn
