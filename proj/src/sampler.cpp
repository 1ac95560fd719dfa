#include "svpinn/sampler.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "svpinn/math_util.hpp"
#include "svpinn/rng.hpp"

namespace svpinn {

NoiseField sample_noise(const GridSpec& grid, std::uint64_t seed, std::uint64_t row) {
    NoiseField nf{grid, std::vector<double>(grid.size())};
    GaussianStream gs(seed, row);
    for (auto& v : nf.w) v = gs.next();
    return nf;
}

std::vector<double> spectral_noise_for_row(const Dst1& dst, std::uint64_t seed, std::uint64_t row) {
    NoiseField nf = sample_noise(dst.grid(), seed, row);
    return dst.apply(nf.w);
}

TestFunctionBatch sample_wm_batch(const GridSpec& grid, double tau, std::size_t N,
                                  std::uint64_t seed) {
    if (tau <= 0.0) throw std::invalid_argument("sample_wm_batch: tau must be positive");
    if (N < 1) throw std::invalid_argument("sample_wm_batch: N must be >= 1");

    const std::size_t m = grid.size();
    TestFunctionBatch batch{grid, tau, seed, N, std::vector<double>(N * m)};

    Dst1 dst(grid);
    const std::vector<double> lam_h = discrete_eigenvalue_field(grid);
    std::vector<double> gain(m);
    for (std::size_t k = 0; k < m; ++k) gain[k] = tau / std::sqrt(1.0 + lam_h[k]);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(N); ++j) {
        double* out = batch.values.data() + static_cast<std::size_t>(j) * m;
        NoiseField nf = sample_noise(grid, seed, static_cast<std::uint64_t>(j));
        dst.apply(nf.w.data(), out);
        for (std::size_t k = 0; k < m; ++k) out[k] *= gain[k];
        dst.apply(out, out);
    }
    return batch;
}

SpectralDraws sample_spectral_coefficients(std::span<const double> lambda, double tau,
                                           std::size_t N, std::uint64_t seed) {
    if (lambda.empty()) throw std::invalid_argument("sample_spectral_coefficients: empty mode set");
    SpectralDraws d;
    d.lambda.assign(lambda.begin(), lambda.end());
    d.rows = N;
    d.coef.resize(N * lambda.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(N); ++j) {
        GaussianStream gs(seed, static_cast<std::uint64_t>(j));
        double* row = d.coef.data() + static_cast<std::size_t>(j) * lambda.size();
        for (std::size_t k = 0; k < lambda.size(); ++k)
            row[k] = tau / std::sqrt(1.0 + lambda[k]) * gs.next();
    }
    return d;
}

std::vector<double> evaluate_spectral_draws(const SpectralDraws& draws, const EigenBasis& basis,
                                            std::span<const std::array<double, 3>> points) {
    if (basis.size() != draws.lambda.size())
        throw std::invalid_argument("evaluate_spectral_draws: basis/mode mismatch");
    const std::size_t P = points.size();
    const std::size_t M = basis.size();
    // phi table: mode-major so the row accumulation streams contiguously.
    std::vector<double> phi(M * P);
    for (std::size_t k = 0; k < M; ++k)
        for (std::size_t p = 0; p < P; ++p) phi[k * P + p] = basis.evaluate(k, points[p]);

    std::vector<double> out(draws.rows * P, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(draws.rows); ++j) {
        const double* coef = draws.coef.data() + static_cast<std::size_t>(j) * M;
        double* row = out.data() + static_cast<std::size_t>(j) * P;
        for (std::size_t k = 0; k < M; ++k) {
            const double c = coef[k];
            const double* ph = phi.data() + k * P;
            for (std::size_t p = 0; p < P; ++p) row[p] += c * ph[p];
        }
    }
    return out;
}

std::vector<double> sample_truncated_spectral(const EigenBasis& basis, double tau,
                                              std::span<const std::array<double, 3>> points,
                                              std::size_t N, std::uint64_t seed) {
    std::vector<double> lambda(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) lambda[k] = basis.lambda(k);
    const SpectralDraws draws = sample_spectral_coefficients(lambda, tau, N, seed);
    return evaluate_spectral_draws(draws, basis, points);
}

double partial_sum_sobolev_norm(std::span<const double> lambda, std::span<const double> coef,
                                double t, std::size_t modes) {
    if (modes > lambda.size() || modes > coef.size())
        throw std::invalid_argument("partial_sum_sobolev_norm: truncation exceeds mode count");
    std::vector<double> terms(modes);
    for (std::size_t k = 0; k < modes; ++k) terms[k] = std::pow(lambda[k], t) * sq(coef[k]);
    return pairwise_sum(terms);
}

double wm_pointwise_covariance(const GridSpec& grid, double tau, std::size_t flat_a,
                               std::size_t flat_b) {
    const std::vector<double> lam_h = discrete_eigenvalue_field(grid);
    const double hd = std::pow(grid.h(), grid.d);
    const auto xa = grid.node(flat_a);
    const auto xb = grid.node(flat_b);
    std::vector<double> terms(grid.size());
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const auto km = grid.multi_index(f);
        EigenIndex k;
        k.d = grid.d;
        k.k = km;
        terms[f] = evaluate_eigenfunction(k, xa) * evaluate_eigenfunction(k, xb) / (1.0 + lam_h[f]);
    }
    return tau * tau * hd * pairwise_sum(terms);
}

double wm_pointwise_variance(const GridSpec& grid, double tau, std::size_t flat) {
    return wm_pointwise_covariance(grid, tau, flat, flat);
}

namespace {

void write_u64(std::FILE* f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    if (std::fwrite(b, 1, 8, f) != 8) throw std::runtime_error("batch file: short write");
}

std::uint64_t read_u64(std::FILE* f) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) throw std::runtime_error("batch file: short read");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_batch(const TestFunctionBatch& batch, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_batch: cannot open " + path);
    write_u64(f, static_cast<std::uint64_t>(batch.grid.d));
    write_u64(f, static_cast<std::uint64_t>(batch.grid.n));
    write_u64(f, static_cast<std::uint64_t>(batch.rows));
    std::uint64_t tau_bits;
    std::memcpy(&tau_bits, &batch.tau, 8);
    write_u64(f, tau_bits);
    write_u64(f, batch.seed);
    // Payload as little-endian binary64; byte order matches the header path.
    for (double v : batch.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        write_u64(f, bits);
    }
    if (std::fclose(f) != 0) throw std::runtime_error("save_batch: close failed");
}

TestFunctionBatch load_batch(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_batch: cannot open " + path);
    TestFunctionBatch batch;
    const auto d = static_cast<int>(read_u64(f));
    const auto n = static_cast<int>(read_u64(f));
    const auto rows = static_cast<std::size_t>(read_u64(f));
    const std::uint64_t tau_bits = read_u64(f);
    std::memcpy(&batch.tau, &tau_bits, 8);
    batch.seed = read_u64(f);
    batch.grid = GridSpec(d, n);
    batch.rows = rows;
    batch.values.resize(rows * batch.grid.size());
    for (double& v : batch.values) {
        const std::uint64_t bits = read_u64(f);
        std::memcpy(&v, &bits, 8);
    }
    std::fclose(f);
    return batch;
}

}  // namespace svpinn
