#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "svpinn/grid.hpp"

namespace svpinn {

// Orthonormal DST-I on the interior grid, self-inverse and diagonalising the
// second-difference Laplacian with zero boundary extension. The fast path is
// FFTW's RODFT00 scaled by (h/2)^{d/2}; dst1_direct below is the O(n^{d+1})
// reference the fast path is tested against.
class Dst1 {
  public:
    explicit Dst1(const GridSpec& grid);
    ~Dst1();

    Dst1(const Dst1&) = delete;
    Dst1& operator=(const Dst1&) = delete;

    const GridSpec& grid() const { return grid_; }

    // out may alias in. Safe to call concurrently on distinct buffers.
    void apply(const double* in, double* out) const;
    void apply(std::span<const double> in, std::span<double> out) const;

    std::vector<double> apply(std::span<const double> in) const;

  private:
    GridSpec grid_;
    void* plan_ = nullptr;  // fftw_plan
    double scale_ = 1.0;
    mutable std::vector<double> scratch_;
};

// Per-axis matrix application of the same transform; serial reference path.
std::vector<double> dst1_direct(std::span<const double> u, const GridSpec& grid);

// (-Delta_h u) via the 2d+1 point stencil with zero boundary extension.
std::vector<double> apply_neg_laplacian_h(std::span<const double> u, const GridSpec& grid);

// lambda^{(h)}_k for every mode, in the shared row-major mode ordering.
std::vector<double> discrete_eigenvalue_field(const GridSpec& grid);

// Continuum lambda_k over the in-band modes, same ordering.
std::vector<double> continuum_eigenvalue_field(const GridSpec& grid);

}  // namespace svpinn
