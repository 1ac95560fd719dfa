#include "svpinn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "svpinn/dst.hpp"
#include "svpinn/math_util.hpp"
#include "svpinn/rng.hpp"
#include "svpinn/weak_norms.hpp"

namespace svpinn {

void StudyReport::write_outputs(const std::string& out_dir) const {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir + "/" + name + ".csv");
        for (std::size_t c = 0; c < columns.size(); ++c)
            csv << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
        csv.precision(17);
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                csv << row[c] << (c + 1 < row.size() ? ',' : '\n');
    }
    nlohmann::json j;
    j["study"] = name;
    j["pass"] = pass;
    for (const auto& [key, value] : summary) j[key] = value;
    std::ofstream js(out_dir + "/" + name + ".json");
    js << j.dump(2) << "\n";
}

StudyReport study_equivalence(int d, int mode_count, int trials, double tau, std::uint64_t seed) {
    StudyReport rep;
    rep.name = "equivalence_d" + std::to_string(d);
    rep.columns = {"trial", "ratio", "c", "C", "contained"};

    const EigenBasis basis = EigenBasis::lowest_modes(d, mode_count, 64);
    std::vector<double> lambda(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) lambda[k] = basis.lambda(k);

    bool all_contained = true;
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    for (int t = 0; t < trials; ++t) {
        GaussianStream gs(seed, static_cast<std::uint64_t>(t) + 1000 * static_cast<std::uint64_t>(d));
        SpectralCoefficients coeffs;
        coeffs.lambda = lambda;
        coeffs.a.resize(lambda.size());
        for (auto& a : coeffs.a) a = gs.next();
        const EquivalenceBounds b = equivalence_ratio_bounds(coeffs, tau);
        const bool contained = b.ratio >= b.c && b.ratio <= b.C;
        all_contained = all_contained && contained;
        min_ratio = std::min(min_ratio, b.ratio);
        max_ratio = std::max(max_ratio, b.ratio);
        rep.rows.push_back({static_cast<double>(t), b.ratio, b.c, b.C, contained ? 1.0 : 0.0});
    }
    rep.pass = all_contained;
    rep.summary = {{"min_ratio", min_ratio}, {"max_ratio", max_ratio}, {"tau", tau}};
    return rep;
}

StudyReport study_trapezoid(int d) {
    StudyReport rep;
    rep.name = "trapezoid_d" + std::to_string(d);
    rep.columns = {"n", "h", "error"};

    // Closed-form integrals: int sin(pi x) = 2/pi per axis.
    const double exact = d == 1 ? 2.0 / kPi : 4.0 / (kPi * kPi);
    std::vector<double> log_h, log_e;
    const std::vector<int> sizes = d == 1 ? std::vector<int>{15, 31, 63, 127, 255, 511}
                                          : std::vector<int>{15, 31, 63, 127, 255};
    for (int n : sizes) {
        const GridSpec grid(d, n);
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const auto x = grid.node(i);
            vals[i] = d == 1 ? sin_pi(x[0]) : sin_pi(x[0]) * sin_pi(x[1]);
        }
        const double s = std::pow(grid.h(), d) * pairwise_sum(vals);
        const double err = std::abs(s - exact);
        rep.rows.push_back({static_cast<double>(n), grid.h(), err});
        log_h.push_back(std::log(grid.h()));
        log_e.push_back(std::log(err));
    }
    const double slope = ols_slope(log_h, log_e);
    const double tol = d == 1 ? 0.1 : 0.15;
    rep.pass = std::abs(slope - 2.0) <= tol;
    rep.summary = {{"slope", slope}, {"target", 2.0}, {"tolerance", tol}};
    return rep;
}

StudyReport study_eigen_convergence(int d) {
    StudyReport rep;
    rep.name = "eigen_convergence_d" + std::to_string(d);
    rep.columns = {"mode", "n", "h", "error"};

    EigenIndex low = d == 1 ? EigenIndex(1) : d == 2 ? EigenIndex(1, 1) : EigenIndex(1, 1, 1);
    EigenIndex high = d == 1 ? EigenIndex(4) : d == 2 ? EigenIndex(4, 3) : EigenIndex(4, 3, 2);
    const std::vector<int> sizes{15, 31, 63, 127, 255};

    bool pass = true;
    double slope_low = 0.0, slope_high = 0.0;
    int mode_id = 0;
    for (const EigenIndex& k : {low, high}) {
        std::vector<double> log_h, log_e;
        for (int n : sizes) {
            const GridSpec grid(d, n);
            const double err = std::abs(discrete_eigenvalue(grid, k) - eigenvalue(k));
            rep.rows.push_back({static_cast<double>(mode_id), static_cast<double>(n), grid.h(), err});
            log_h.push_back(std::log(grid.h()));
            log_e.push_back(std::log(err));
        }
        const double slope = ols_slope(log_h, log_e);
        (mode_id == 0 ? slope_low : slope_high) = slope;
        pass = pass && std::abs(slope - 2.0) <= 0.1;
        ++mode_id;
    }

    // Quadratic eigenvalue scaling of the error constant, measured in 1D at
    // fixed h between modes 1 and 4 (ratio (lambda_4/lambda_1)^2 = 256).
    double ratio = 0.0, ratio_target = 0.0;
    {
        const GridSpec grid(1, 255);
        const double e1 = std::abs(discrete_eigenvalue(grid, EigenIndex(1)) - eigenvalue(EigenIndex(1)));
        const double e4 = std::abs(discrete_eigenvalue(grid, EigenIndex(4)) - eigenvalue(EigenIndex(4)));
        ratio = e4 / e1;
        ratio_target = sq(eigenvalue(EigenIndex(4)) / eigenvalue(EigenIndex(1)));
        pass = pass && std::abs(ratio - ratio_target) <= 0.2 * ratio_target;
    }
    rep.pass = pass;
    rep.summary = {{"slope_low_mode", slope_low},
                   {"slope_high_mode", slope_high},
                   {"lambda_sq_ratio", ratio},
                   {"lambda_sq_ratio_target", ratio_target}};
    return rep;
}

namespace {

// Synthetic residual with known continuum coefficients: low sine modes plus
// a polynomial taper whose sine coefficients are closed-form.
struct SyntheticResidual {
    int d;

    double value(const Point& x) const {
        if (d == 1) return sin_pi(x[0]) + 0.3 * sin_pi(3.0 * x[0]) + 0.5 * x[0] * (1.0 - x[0]);
        return sin_pi(x[0]) * sin_pi(x[1]) +
               0.5 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    }

    // <x(1-x), sqrt(2) sin(k pi x)> per axis.
    static double taper_coeff(int k) {
        const int odd = k % 2;
        if (!odd) return 0.0;
        const double kp = k * kPi;
        return std::sqrt(2.0) * 4.0 / (kp * kp * kp);
    }

    double coeff(int k1, int k2) const {
        if (d == 1) {
            double a = 0.5 * taper_coeff(k1);
            if (k1 == 1) a += 1.0 / std::sqrt(2.0);
            if (k1 == 3) a += 0.3 / std::sqrt(2.0);
            return a;
        }
        double a = 0.5 * taper_coeff(k1) * taper_coeff(k2);
        if (k1 == 1 && k2 == 1) a += 0.5;
        return a;
    }

    // tau^2 sum (1+lambda)^{-1} a^2 over a truncation far past roundoff.
    double phi_norm_sq(double tau) const {
        const int K = d == 1 ? 20000 : 800;
        std::vector<double> terms;
        if (d == 1) {
            terms.reserve(static_cast<std::size_t>(K));
            for (int k = 1; k <= K; ++k) {
                const double lam = kPi * kPi * k * k;
                terms.push_back(sq(coeff(k, 0)) / (1.0 + lam));
            }
        } else {
            terms.reserve(static_cast<std::size_t>(K) * K);
            for (int k1 = 1; k1 <= K; ++k1)
                for (int k2 = 1; k2 <= K; ++k2) {
                    const double a = coeff(k1, k2);
                    if (a == 0.0) continue;
                    const double lam = kPi * kPi * (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2);
                    terms.push_back(sq(a) / (1.0 + lam));
                }
        }
        return tau * tau * pairwise_sum(terms);
    }
};

// Mean over `reps` fresh batches of |corrected loss - exact|, where each
// batch pairing is drawn in spectral space: p_j = sum_k alpha_k g_jk with
// alpha = (tau / n^d) rhat_k / sqrt(1 + lambda^h_k). This matches pairing the
// residual against transform-sampled rows draw-for-draw.
double mean_corrected_deviation(const GridSpec& grid, const std::vector<double>& alpha,
                                double exact, double correction, std::size_t N, int reps,
                                std::uint64_t seed) {
    const std::size_t m = grid.size();
    std::vector<double> devs(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
        const std::uint64_t rep_seed = derive_stream(seed, static_cast<std::uint64_t>(rep));
        std::vector<double> p2(N);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(N); ++j) {
            GaussianStream gs(rep_seed, static_cast<std::uint64_t>(j));
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += alpha[k] * gs.next();
            p2[static_cast<std::size_t>(j)] = sq(acc);
        }
        const double loss = pairwise_sum(p2) / static_cast<double>(N);
        devs[static_cast<std::size_t>(rep)] = std::abs(correction * loss - exact);
    }
    return pairwise_sum(devs) / static_cast<double>(reps);
}

std::vector<double> pairing_gains(const GridSpec& grid, const SyntheticResidual& R, double tau) {
    std::vector<double> r(grid.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = R.value(grid.node(i));
    Dst1 dst(grid);
    std::vector<double> rhat = dst.apply(r);
    const std::vector<double> lam_h = discrete_eigenvalue_field(grid);
    const double nd = std::pow(static_cast<double>(grid.n), grid.d);
    std::vector<double> alpha(grid.size());
    for (std::size_t k = 0; k < alpha.size(); ++k)
        alpha[k] = tau / nd * rhat[k] / std::sqrt(1.0 + lam_h[k]);
    return alpha;
}

}  // namespace

StudyReport study_estimator_decay(int d, std::uint64_t seed, bool quick) {
    StudyReport rep;
    rep.name = "estimator_decay_d" + std::to_string(d);
    rep.columns = {"part", "n", "N", "mean_abs_deviation"};

    const double tau = 1.0;
    SyntheticResidual R{d};
    const double exact = R.phi_norm_sq(tau);

    bool pass = true;
    double n_slope = 0.0;
    double h_slope = 0.0;

    if (d == 1) {
        // Sample-count part at a fixed fine grid.
        const GridSpec grid(1, 255);
        const std::vector<double> alpha = pairing_gains(grid, R, tau);
        const double corr = correction_factor(grid);
        const int reps = quick ? 60 : 200;
        std::vector<double> logN, logD;
        for (std::size_t N : {std::size_t{100}, std::size_t{1000}, std::size_t{10000}}) {
            const double dev = mean_corrected_deviation(grid, alpha, exact, corr, N, reps, seed);
            rep.rows.push_back({0.0, 255.0, static_cast<double>(N), dev});
            logN.push_back(std::log(static_cast<double>(N)));
            logD.push_back(std::log(dev));
        }
        n_slope = ols_slope(logN, logD);
        pass = pass && std::abs(n_slope + 0.5) <= 0.1;
    }

    {
        // Mesh part in the large-sample limit. For a fixed smooth residual
        // the mesh bias at these sizes lies far below any feasible sampling
        // floor, so the deviation is evaluated exactly through the closed
        // form of the expected corrected loss (the N -> infinity limit of
        // the measured quantity).
        const std::vector<int> sizes =
            d == 1 ? std::vector<int>{31, 63, 127, 255} : std::vector<int>{15, 31, 63, 127};
        std::vector<double> logH, logD;
        for (int n : sizes) {
            const GridSpec grid(d, n);
            ResidualField res{grid, std::vector<double>(grid.size())};
            for (std::size_t i = 0; i < res.r.size(); ++i) res.r[i] = R.value(grid.node(i));
            const double dev = std::abs(expected_corrected_loss(res, tau) - exact);
            rep.rows.push_back({1.0, static_cast<double>(n), 0.0, dev});
            logH.push_back(std::log(grid.h()));
            logD.push_back(std::log(dev));
        }
        h_slope = ols_slope(logH, logD);
        pass = pass && (d == 1 ? h_slope >= 1.4 : h_slope >= 0.9);
    }

    rep.pass = pass;
    rep.summary = {{"exact_phi_norm_sq", exact}, {"n_slope", n_slope}, {"h_slope", h_slope}};
    return rep;
}

StudyReport study_regularity(int d, std::uint64_t seed) {
    StudyReport rep;
    rep.name = "regularity_d" + std::to_string(d);
    rep.columns = {"order", "modes", "mean_partial_norm"};

    const int max_component = d == 1 ? 65536 : 256;
    const std::size_t max_modes = d == 1 ? 65536 : 65536;
    const EigenBasis basis = EigenBasis::lowest_modes(d, static_cast<int>(max_modes), max_component);
    std::vector<double> lambda(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) lambda[k] = basis.lambda(k);

    const std::size_t draws = 100;
    // Common draws across truncations: prefix sums of one coefficient set.
    const SpectralDraws dr = sample_spectral_coefficients(lambda, 1.0, draws, seed);

    std::vector<std::size_t> ladder{1, 4, 16, 64, 256, 1024, 4096, 16384, 32768, 65536};
    const double t_minus = 1.0 - 0.5 * d - 0.1;
    const double t_plus = 1.0 - 0.5 * d + 0.1;

    bool pass = true;
    double last_consecutive_ratio = 0.0, divergence_ratio = 0.0;
    for (double t : {t_minus, t_plus}) {
        std::vector<double> means;
        for (std::size_t M : ladder) {
            std::vector<double> norms(draws);
            for (std::size_t j = 0; j < draws; ++j)
                norms[j] = partial_sum_sobolev_norm(lambda, dr.row(j), t, M);
            const double mean = pairwise_sum(norms) / static_cast<double>(draws);
            means.push_back(mean);
            rep.rows.push_back({t, static_cast<double>(M), mean});
        }
        if (t == t_minus) {
            last_consecutive_ratio = means[means.size() - 1] / means[means.size() - 2];
            pass = pass && last_consecutive_ratio < 1.05;
        } else {
            divergence_ratio = means.back() / means.front();
            pass = pass && divergence_ratio > 10.0;
        }
    }
    rep.pass = pass;
    rep.summary = {{"bounded_last_ratio", last_consecutive_ratio},
                   {"divergent_last_first_ratio", divergence_ratio},
                   {"t_minus", t_minus},
                   {"t_plus", t_plus}};
    return rep;
}

int steps_to_threshold(const RunMetrics& metrics, double threshold) {
    for (const auto& row : metrics.rows)
        if (row.has_l2 && row.l2 < threshold) return row.step;
    return -1;
}

ComparisonReport study_comparison(const ProblemSpec& problem, const TrainConfig& base_config,
                                  int budget_steps) {
    ComparisonReport rep;
    rep.experiment = problem.name;

    struct Cell {
        Method method;
        OptimizerKind opt;
        const char* mname;
        const char* oname;
    };
    const Cell cells[] = {{Method::Pinn, OptimizerKind::Gd, "pinn", "gd"},
                          {Method::Svpinn, OptimizerKind::Gd, "svpinn", "gd"},
                          {Method::Svpinn, OptimizerKind::Lbfgs, "svpinn", "lbfgs"}};
    for (const Cell& c : cells) {
        TrainConfig cfg = base_config;
        cfg.method = c.method;
        cfg.optimizer = c.opt;
        cfg.steps = budget_steps;
        const TrainResult r = run_training(problem, cfg);
        ComparisonCell out;
        out.method = c.mname;
        out.optimizer = c.oname;
        out.final_l2 = r.final_l2;
        out.best_l2 = r.best_l2;
        out.steps_to_1pct = steps_to_threshold(r.metrics, 0.01);
        out.wall_s = r.metrics.rows.empty() ? 0.0 : r.metrics.rows.back().wall_s;
        rep.cells.push_back(out);
    }
    return rep;
}

void ComparisonReport::write_outputs(const std::string& out_dir) const {
    std::filesystem::create_directories(out_dir);
    nlohmann::json j;
    j["experiment"] = experiment;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json cell;
        cell["method"] = c.method;
        cell["optimizer"] = c.optimizer;
        cell["final_l2"] = c.final_l2;
        cell["best_l2"] = c.best_l2;
        cell["steps_to_1pct"] = c.steps_to_1pct;
        cell["wall_s"] = c.wall_s;
        j["cells"].push_back(cell);
    }
    std::ofstream js(out_dir + "/comparison_" + experiment + ".json");
    js << j.dump(2) << "\n";
}

}  // namespace svpinn
