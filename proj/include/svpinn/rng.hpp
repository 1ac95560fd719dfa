#pragma once

#include <cmath>
#include <cstdint>

#include "svpinn/math_util.hpp"

namespace svpinn {

// SplitMix64. Small, fully specified, and splittable: independent streams are
// derived by hashing (seed, stream id), so batch rows can be generated in any
// order or in parallel and still reproduce bit-for-bit.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]; never 0 so it is safe under log().
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (0x5851f42d4c957f2dULL * (stream + 1)));
    return mix.next_u64();
}

// Standard Gaussian draws by Box-Muller on top of SplitMix64. Self-contained
// so sampled batches are identical across standard libraries and platforms.
struct GaussianStream {
    SplitMix64 rng;
    double cached = 0.0;
    bool has_cached = false;

    GaussianStream(std::uint64_t seed, std::uint64_t stream)
        : rng(derive_stream(seed, stream)) {}

    double next() {
        if (has_cached) {
            has_cached = false;
            return cached;
        }
        const double u1 = rng.next_unit();
        const double u2 = rng.next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        cached = r * std::sin(a);
        has_cached = true;
        return r * std::cos(a);
    }

    // Uniform in [-s, s].
    double next_uniform_sym(double s) {
        return s * (2.0 * rng.next_unit() - 1.0);
    }
};

}  // namespace svpinn
