#include "svpinn/weak_norms.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "svpinn/dst.hpp"
#include "svpinn/math_util.hpp"

namespace svpinn {

double dual_norm_sq(const SpectralCoefficients& coeffs, double s) {
    if (coeffs.lambda.size() != coeffs.a.size())
        throw std::invalid_argument("dual_norm_sq: size mismatch");
    std::vector<double> terms(coeffs.lambda.size());
    for (std::size_t k = 0; k < terms.size(); ++k)
        terms[k] = std::pow(coeffs.lambda[k], -s) * sq(coeffs.a[k]);
    return pairwise_sum(terms);
}

double phi_norm_sq_exact(const SpectralCoefficients& coeffs, double tau) {
    if (coeffs.lambda.size() != coeffs.a.size())
        throw std::invalid_argument("phi_norm_sq_exact: size mismatch");
    if (tau <= 0.0) throw std::invalid_argument("phi_norm_sq_exact: tau must be positive");
    std::vector<double> terms(coeffs.lambda.size());
    for (std::size_t k = 0; k < terms.size(); ++k)
        terms[k] = sq(coeffs.a[k]) / (1.0 + coeffs.lambda[k]);
    return tau * tau * pairwise_sum(terms);
}

EquivalenceBounds equivalence_ratio_bounds(const SpectralCoefficients& coeffs, double tau) {
    if (coeffs.lambda.empty()) throw std::invalid_argument("equivalence_ratio_bounds: empty set");
    bool any_nonzero = false;
    for (double v : coeffs.a) any_nonzero = any_nonzero || v != 0.0;
    if (!any_nonzero)
        throw std::invalid_argument("equivalence_ratio_bounds: all coefficients zero, ratio undefined");

    EquivalenceBounds b{};
    b.ratio = dual_norm_sq(coeffs, 1.0) / phi_norm_sq_exact(coeffs, tau);
    // (1+lambda)/(tau^2 lambda) is decreasing in lambda, but scan rather than
    // assume the caller sorted the modes.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double lam : coeffs.lambda) {
        const double v = (1.0 + lam) / (tau * tau * lam);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    b.c = lo;
    b.C = hi;
    return b;
}

double discrete_inner(std::span<const double> u, std::span<const double> v, const GridSpec& grid) {
    if (u.size() != grid.size() || v.size() != grid.size())
        throw std::invalid_argument("discrete_inner: size mismatch");
    std::vector<double> terms(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) terms[i] = u[i] * v[i];
    return std::pow(grid.h(), grid.d) * pairwise_sum(terms);
}

std::vector<double> batch_pairings(const ResidualField& residual, const TestFunctionBatch& batch) {
    if (!(residual.grid == batch.grid))
        throw std::invalid_argument("batch_pairings: grid mismatch");
    const std::size_t nc = batch.grid.size();
    const double inv_nc = 1.0 / static_cast<double>(nc);
    std::vector<double> p(batch.rows);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(batch.rows); ++j) {
        const double* phi = batch.values.data() + static_cast<std::size_t>(j) * nc;
        const double* r = residual.r.data();
        // Fixed 4-lane accumulation; order independent of thread count.
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t i = 0;
        for (; i + 4 <= nc; i += 4) {
            a0 += r[i] * phi[i];
            a1 += r[i + 1] * phi[i + 1];
            a2 += r[i + 2] * phi[i + 2];
            a3 += r[i + 3] * phi[i + 3];
        }
        for (; i < nc; ++i) a0 += r[i] * phi[i];
        p[static_cast<std::size_t>(j)] = ((a0 + a1) + (a2 + a3)) * inv_nc;
    }
    return p;
}

double empirical_phi_loss(const ResidualField& residual, const TestFunctionBatch& batch) {
    const std::vector<double> p = batch_pairings(residual, batch);
    std::vector<double> terms(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) terms[j] = sq(p[j]);
    return pairwise_sum(terms) / static_cast<double>(p.size());
}

double empirical_phi_loss_serial(const ResidualField& residual, const TestFunctionBatch& batch) {
    if (!(residual.grid == batch.grid))
        throw std::invalid_argument("empirical_phi_loss_serial: grid mismatch");
    const std::size_t nc = batch.grid.size();
    double total = 0.0;
    for (std::size_t j = 0; j < batch.rows; ++j) {
        double pj = 0.0;
        for (std::size_t i = 0; i < nc; ++i) pj += residual.r[i] * batch.values[j * nc + i];
        pj /= static_cast<double>(nc);
        total += pj * pj;
    }
    return total / static_cast<double>(batch.rows);
}

double correction_factor(const GridSpec& grid) {
    const double n = static_cast<double>(grid.n);
    return std::pow(n * n * grid.h(), grid.d);
}

double corrected_phi_loss(const ResidualField& residual, const TestFunctionBatch& batch) {
    return correction_factor(residual.grid) * empirical_phi_loss(residual, batch);
}

double expected_corrected_loss(const ResidualField& residual, double tau) {
    const GridSpec& grid = residual.grid;
    Dst1 dst(grid);
    std::vector<double> rhat = dst.apply(residual.r);
    const std::vector<double> lam_h = discrete_eigenvalue_field(grid);
    const double hd = std::pow(grid.h(), grid.d);
    // <r, phi_k>_h = h^{d/2} * dst1(r)[k].
    std::vector<double> terms(rhat.size());
    for (std::size_t k = 0; k < rhat.size(); ++k)
        terms[k] = hd * sq(rhat[k]) / (1.0 + lam_h[k]);
    return tau * tau * pairwise_sum(terms);
}

double boundary_penalty(std::span<const double> u_on_boundary, std::span<const double> g_values) {
    if (u_on_boundary.size() != g_values.size())
        throw std::invalid_argument("boundary_penalty: length mismatch");
    if (u_on_boundary.empty()) return 0.0;
    std::vector<double> terms(u_on_boundary.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = sq(u_on_boundary[i] - g_values[i]);
    return pairwise_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace svpinn
