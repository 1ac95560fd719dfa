#include "svpinn/dst.hpp"

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "svpinn/math_util.hpp"

namespace svpinn {

namespace {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
fftw_plan make_plan(const GridSpec& grid) {
    int dims[3] = {grid.n, grid.n, grid.n};
    fftw_r2r_kind kinds[3] = {FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00};
    std::vector<double> dummy(grid.size());
    fftw_plan p = nullptr;
#pragma omp critical(svpinn_fftw_planner)
    p = fftw_plan_r2r(grid.d, dims, dummy.data(), dummy.data(), kinds,
                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("Dst1: fftw_plan_r2r failed");
    return p;
}

}  // namespace

Dst1::Dst1(const GridSpec& grid) : grid_(grid) {
    plan_ = make_plan(grid_);
    scale_ = std::pow(0.5 * grid_.h(), 0.5 * grid_.d);
}

Dst1::~Dst1() {
    if (plan_) {
#pragma omp critical(svpinn_fftw_planner)
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
}

void Dst1::apply(const double* in, double* out) const {
    if (in != out) std::memcpy(out, in, grid_.size() * sizeof(double));
    fftw_execute_r2r(static_cast<fftw_plan>(plan_), out, out);
    const std::size_t m = grid_.size();
    for (std::size_t i = 0; i < m; ++i) out[i] *= scale_;
}

void Dst1::apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != grid_.size() || out.size() != grid_.size())
        throw std::invalid_argument("Dst1::apply: size mismatch");
    apply(in.data(), out.data());
}

std::vector<double> Dst1::apply(std::span<const double> in) const {
    std::vector<double> out(grid_.size());
    apply(in, out);
    return out;
}

std::vector<double> dst1_direct(std::span<const double> u, const GridSpec& grid) {
    if (u.size() != grid.size())
        throw std::invalid_argument("dst1_direct: size mismatch");
    const int n = grid.n;
    const double h = grid.h();
    // 1D orthonormal kernel S[k'][k] = sqrt(2h) sin(pi k k' h).
    std::vector<double> S(static_cast<std::size_t>(n) * n);
    for (int kp = 1; kp <= n; ++kp)
        for (int k = 1; k <= n; ++k)
            S[static_cast<std::size_t>(kp - 1) * n + (k - 1)] =
                std::sqrt(2.0 * h) * sin_pi(static_cast<double>(k) * kp * h);

    std::vector<double> cur(u.begin(), u.end());
    std::vector<double> nxt(cur.size());
    const std::size_t total = grid.size();
    // Apply S along one axis at a time.
    for (int axis = 0; axis < grid.d; ++axis) {
        std::size_t stride = 1;
        for (int j = grid.d - 1; j > axis; --j) stride *= static_cast<std::size_t>(n);
        const std::size_t nlines = total / static_cast<std::size_t>(n);
        for (std::size_t line = 0; line < nlines; ++line) {
            // Base offset of this line: split flat index around the axis.
            const std::size_t outer = line / stride;
            const std::size_t inner = line % stride;
            const std::size_t base = outer * stride * static_cast<std::size_t>(n) + inner;
            for (int kp = 0; kp < n; ++kp) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k)
                    acc += S[static_cast<std::size_t>(kp) * n + k] * cur[base + static_cast<std::size_t>(k) * stride];
                nxt[base + static_cast<std::size_t>(kp) * stride] = acc;
            }
        }
        cur.swap(nxt);
    }
    return cur;
}

std::vector<double> apply_neg_laplacian_h(std::span<const double> u, const GridSpec& grid) {
    if (u.size() != grid.size())
        throw std::invalid_argument("apply_neg_laplacian_h: size mismatch");
    const int n = grid.n;
    const double inv_h2 = sq(static_cast<double>(n + 1));
    std::vector<double> out(u.size());
    const std::size_t total = grid.size();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(total); ++fi) {
        const std::size_t f = static_cast<std::size_t>(fi);
        const auto k = grid.multi_index(f);
        double acc = 2.0 * grid.d * u[f];
        std::size_t stride = 1;
        for (int j = grid.d - 1; j >= 0; --j) {
            const int kj = k[static_cast<std::size_t>(j)];
            if (kj > 1) acc -= u[f - stride];
            if (kj < n) acc -= u[f + stride];
            stride *= static_cast<std::size_t>(n);
        }
        out[f] = acc * inv_h2;
    }
    return out;
}

std::vector<double> discrete_eigenvalue_field(const GridSpec& grid) {
    const int n = grid.n;
    const double h = grid.h();
    std::vector<double> axis(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k)
        axis[static_cast<std::size_t>(k - 1)] = 4.0 / (h * h) * sq(sin_pi(0.5 * k * h));

    std::vector<double> lam(grid.size());
    for (std::size_t f = 0; f < lam.size(); ++f) {
        const auto k = grid.multi_index(f);
        double s = 0.0;
        for (int j = 0; j < grid.d; ++j) s += axis[static_cast<std::size_t>(k[static_cast<std::size_t>(j)] - 1)];
        lam[f] = s;
    }
    return lam;
}

std::vector<double> continuum_eigenvalue_field(const GridSpec& grid) {
    std::vector<double> lam(grid.size());
    for (std::size_t f = 0; f < lam.size(); ++f) {
        const auto k = grid.multi_index(f);
        double s = 0.0;
        for (int j = 0; j < grid.d; ++j) s += sq(static_cast<double>(k[static_cast<std::size_t>(j)]));
        lam[f] = kPi * kPi * s;
    }
    return lam;
}

}  // namespace svpinn
