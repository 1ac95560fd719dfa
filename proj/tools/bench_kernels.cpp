// Timing comparison of the parallel kernels against their serial reference
// implementations: DST-I, batch pairing loss, and jet evaluation.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "svpinn/dst.hpp"
#include "svpinn/net.hpp"
#include "svpinn/problems.hpp"
#include "svpinn/rng.hpp"
#include "svpinn/sampler.hpp"
#include "svpinn/weak_norms.hpp"

using namespace svpinn;

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

}  // namespace

int main() {
    std::printf("threads: %d\n\n", omp_get_max_threads());
    std::printf("%-34s %12s %12s %8s\n", "kernel", "serial (s)", "parallel (s)", "speedup");

    {
        const GridSpec grid(2, 127);
        std::vector<double> u(grid.size());
        GaussianStream gs(7, 0);
        for (auto& v : u) v = gs.next();
        Dst1 dst(grid);
        std::vector<double> out(u.size());
        const double ts = time_best_of(3, [&] { auto r = dst1_direct(u, grid); });
        const double tp = time_best_of(3, [&] { dst.apply(u, out); });
        std::printf("%-34s %12.4f %12.4f %8.1fx\n", "dst1 127x127", ts, tp, ts / tp);
    }

    {
        const GridSpec grid(1, 511);
        const TestFunctionBatch batch = sample_wm_batch(grid, 1.0, 4000, 11);
        ResidualField res{grid, std::vector<double>(grid.size())};
        GaussianStream gs(13, 0);
        for (auto& v : res.r) v = gs.next();
        const double ts = time_best_of(3, [&] { (void)empirical_phi_loss_serial(res, batch); });
        const double tp = time_best_of(3, [&] { (void)empirical_phi_loss(res, batch); });
        std::printf("%-34s %12.4f %12.4f %8.1fx\n", "phi loss 4000x511", ts, tp, ts / tp);
    }

    {
        const FeatureMap fm = make_daff_features(2, 128, 64);
        NetworkParams params = make_network(fm, 128, 3, true);
        glorot_init(params, 3);
        const GridSpec grid(2, 63);
        std::vector<Point> pts(grid.size());
        for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = grid.node(i);
        BlockEvaluator ev(params.shape, params.fmap, true);
        std::vector<EvalJet> jets;
        const double ts = time_best_of(2, [&] {
            for (const auto& p : pts) (void)eval_jet(params, p);
        });
        const double tp = time_best_of(2, [&] { ev.evaluate(params, pts, jets); });
        std::printf("%-34s %12.4f %12.4f %8.1fx\n", "jet eval 3969 pts (128x3 net)", ts, tp,
                    ts / tp);
    }

    return 0;
}
