#include "svpinn/train.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "svpinn/math_util.hpp"

namespace svpinn {

namespace {

std::vector<Point> residual_point_set(const ProblemSpec& problem, bool offset) {
    if (!offset) return problem.collocation_points();
    // Residuals at (k-1)/n per axis while the test functions stay on the
    // grid nodes; opt-in quadrature perturbation.
    const GridSpec& g = problem.collocation;
    std::vector<Point> pts(g.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto k = g.multi_index(i);
        Point p{0.0, 0.0, 0.0};
        for (int j = 0; j < g.d; ++j)
            p[static_cast<std::size_t>(j)] =
                static_cast<double>(k[static_cast<std::size_t>(j)] - 1) / g.n;
        pts[i] = p;
    }
    return pts;
}

}  // namespace

LossEvaluator::LossEvaluator(const ProblemSpec& problem, Method method, double lambda_b,
                             const TestFunctionBatch* batch, bool offset_collocation)
    : problem_(problem), method_(method), lambda_b_(lambda_b), batch_(batch) {
    if (method_ == Method::Svpinn) {
        if (!batch_) throw std::invalid_argument("LossEvaluator: svpinn mode requires a batch");
        if (!(batch_->grid == problem_.collocation))
            throw std::invalid_argument("LossEvaluator: batch grid does not match problem grid");
    }
    residual_points_ = residual_point_set(problem_, offset_collocation);
    f_values_.resize(residual_points_.size());
    for (std::size_t i = 0; i < residual_points_.size(); ++i)
        f_values_[i] = problem_.f(residual_points_[i]);
    if (lambda_b_ > 0.0) {
        g_values_.resize(problem_.boundary_points.size());
        for (std::size_t i = 0; i < g_values_.size(); ++i)
            g_values_[i] = problem_.homogeneous ? 0.0 : problem_.g(problem_.boundary_points[i]);
    }
}

void LossEvaluator::set_network(NetworkParams params) {
    params_ = std::move(params);
    trainable_ = trainable_indices(params_);
    jet_eval_.emplace(params_.shape, params_.fmap, true);
    if (lambda_b_ > 0.0) val_eval_.emplace(params_.shape, params_.fmap, false);
}

std::vector<double> LossEvaluator::pack() const {
    std::vector<double> packed(trainable_.size());
    for (std::size_t i = 0; i < trainable_.size(); ++i) packed[i] = params_.theta[trainable_[i]];
    return packed;
}

void LossEvaluator::unpack(std::span<const double> packed) {
    if (packed.size() != trainable_.size())
        throw std::invalid_argument("LossEvaluator::unpack: size mismatch");
    for (std::size_t i = 0; i < trainable_.size(); ++i) params_.theta[trainable_[i]] = packed[i];
}

ResidualField LossEvaluator::residual_field() {
    std::vector<EvalJet> jets;
    jet_eval_->evaluate(params_, residual_points_, jets);
    ResidualField res{problem_.collocation, std::vector<double>(jets.size())};
    const auto& pts = residual_points_;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jets.size()); ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        res.r[u] = apply_operator(problem_.op, jets[u], pts[u]) - f_values_[u];
    }
    return res;
}

double LossEvaluator::evaluate(std::span<const double> packed, std::span<double>* grad) {
    unpack(packed);
    const std::size_t nc = residual_points_.size();

    std::vector<EvalJet> jets;
    jet_eval_->evaluate(params_, residual_points_, jets);
    std::vector<double> r(nc);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nc); ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        r[u] = apply_operator(problem_.op, jets[u], residual_points_[u]) - f_values_[u];
    }

    // Interior term and the loss cotangent q_i on each residual.
    double interior = 0.0;
    std::vector<double> q;
    if (method_ == Method::Svpinn) {
        const std::size_t N = batch_->rows;
        const double inv_nc = 1.0 / static_cast<double>(nc);
        std::vector<double> p(N);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(N); ++j) {
            const double* phi = batch_->values.data() + static_cast<std::size_t>(j) * nc;
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
        std::vector<double> p2(N);
        for (std::size_t j = 0; j < N; ++j) p2[j] = sq(p[j]);
        interior = pairwise_sum(p2) / static_cast<double>(N);

        if (grad) {
            // q = (2 / (N nc)) Phi^T p, accumulated over fixed row groups so
            // the reduction order does not depend on the thread count.
            q.assign(nc, 0.0);
            const std::size_t groups = std::min<std::size_t>(32, N);
            const std::size_t per = (N + groups - 1) / groups;
            std::vector<std::vector<double>> part(groups);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(groups); ++g) {
                auto& acc = part[static_cast<std::size_t>(g)];
                acc.assign(nc, 0.0);
                const std::size_t j0 = static_cast<std::size_t>(g) * per;
                const std::size_t j1 = std::min(j0 + per, N);
                for (std::size_t j = j0; j < j1; ++j) {
                    const double pj = p[j];
                    const double* phi = batch_->values.data() + j * nc;
                    for (std::size_t i = 0; i < nc; ++i) acc[i] += pj * phi[i];
                }
            }
            for (std::size_t g = 0; g < groups; ++g)
                for (std::size_t i = 0; i < nc; ++i) q[i] += part[g][i];
            const double scale = 2.0 / (static_cast<double>(N) * static_cast<double>(nc));
            for (std::size_t i = 0; i < nc; ++i) q[i] *= scale;
        }
    } else {
        std::vector<double> r2(nc);
        for (std::size_t i = 0; i < nc; ++i) r2[i] = sq(r[i]);
        interior = pairwise_sum(r2) / static_cast<double>(nc);
        if (grad) {
            q.resize(nc);
            const double scale = 2.0 / static_cast<double>(nc);
            for (std::size_t i = 0; i < nc; ++i) q[i] = scale * r[i];
        }
    }

    // Boundary term.
    double boundary = 0.0;
    std::vector<EvalJet> bvals;
    if (lambda_b_ > 0.0 && !problem_.boundary_points.empty()) {
        val_eval_->evaluate(params_, problem_.boundary_points, bvals);
        std::vector<double> u(bvals.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = bvals[i].value;
        boundary = boundary_penalty(u, g_values_);
    }

    if (grad) {
        std::fill(grad->begin(), grad->end(), 0.0);
        std::vector<double> full(params_.shape.nparams, 0.0);
        std::vector<JetCotangent> cots(nc);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nc); ++i) {
            const std::size_t u = static_cast<std::size_t>(i);
            cots[u] = operator_cotangent(problem_.op, residual_points_[u], q[u]);
        }
        jet_eval_->accumulate_gradient(params_, residual_points_, cots, full);

        if (lambda_b_ > 0.0 && !problem_.boundary_points.empty()) {
            const std::size_t nb = problem_.boundary_points.size();
            std::vector<JetCotangent> bcots(nb);
            const double scale = 2.0 * lambda_b_ / static_cast<double>(nb);
            for (std::size_t i = 0; i < nb; ++i)
                bcots[i].value = scale * (bvals[i].value - g_values_[i]);
            val_eval_->accumulate_gradient(params_, problem_.boundary_points, bcots, full);
        }
        for (std::size_t i = 0; i < trainable_.size(); ++i) (*grad)[i] = full[trainable_[i]];
    }

    last_interior_ = interior;
    last_boundary_ = boundary;
    return interior + lambda_b_ * boundary;
}

double LossEvaluator::operator()(std::span<const double> packed, std::span<double> grad) {
    return evaluate(packed, &grad);
}

double LossEvaluator::loss_only(std::span<const double> packed) {
    return evaluate(packed, nullptr);
}

double balance_tau(LossEvaluator& eval) {
    const std::vector<double> packed = eval.pack();
    eval.loss_only(packed);
    const double interior = eval.last_interior();
    const double boundary = eval.last_boundary();
    if (boundary <= 0.0)
        throw std::domain_error("balance_tau: boundary loss is zero at the initial parameters");
    if (interior <= 0.0)
        throw std::domain_error("balance_tau: interior loss is zero at the initial parameters");
    return std::sqrt(boundary / interior);
}

double l2_relative_error(const NetworkParams& params, const ProblemSpec& problem) {
    BlockEvaluator ev(params.shape, params.fmap, false);
    std::vector<EvalJet> vals;
    ev.evaluate(params, problem.test_points, vals);
    const std::size_t n = problem.test_points.size();
    std::vector<double> num(n), den(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        const double exact = problem.exact(problem.test_points[u]);
        num[u] = sq(vals[u].value - exact);
        den[u] = sq(exact);
    }
    const double d = pairwise_sum(den);
    if (d == 0.0)
        throw std::domain_error("l2_relative_error: exact solution vanishes on the test grid");
    return std::sqrt(pairwise_sum(num) / d);
}

TrainResult run_training(const ProblemSpec& problem, const TrainConfig& config) {
    FeatureMap fmap;
    switch (config.features) {
        case FeatureKind::Daff:
            fmap = make_daff_features(problem.d, config.feature_count, config.daff_max_component);
            break;
        case FeatureKind::Fourier:
            fmap = make_fourier_features(problem.d, config.feature_count, config.sigma_ff,
                                         config.init_seed + 0x77);
            break;
        case FeatureKind::Identity:
            fmap = make_identity_features(problem.d);
            break;
    }
    const bool hard = config.hard_boundary && problem.homogeneous &&
                      config.features == FeatureKind::Daff;
    NetworkParams net = make_network(fmap, config.width, config.hidden, hard);
    glorot_init(net, config.init_seed);
    if (config.init_scale != 1.0)
        for (double& v : net.theta) v *= config.init_scale;

    double lambda_b = hard ? 0.0 : config.lambda_b;

    TrainResult result;
    RunMetrics& metrics = result.metrics;
    metrics.tau_used = config.tau;

    std::optional<TestFunctionBatch> batch;
    if (config.method == Method::Svpinn) {
        double tau = config.tau;
        if (config.tau_balanced && lambda_b > 0.0) {
            TestFunctionBatch unit =
                sample_wm_batch(problem.collocation, 1.0, config.batch_rows, config.batch_seed);
            LossEvaluator probe(problem, Method::Svpinn, lambda_b, &unit, config.offset_collocation);
            probe.set_network(net);
            try {
                tau = balance_tau(probe);
                metrics.tau_was_balanced = true;
            } catch (const std::domain_error&) {
                tau = config.tau;  // balancing undefined; stay on the fixed value
            }
            // Reuse the unit batch: scaling by tau is exact up to one rounding.
            for (auto& v : unit.values) v *= tau;
            unit.tau = tau;
            batch = std::move(unit);
        } else {
            batch = sample_wm_batch(problem.collocation, tau, config.batch_rows, config.batch_seed);
        }
        metrics.tau_used = batch->tau;
    }

    LossEvaluator loss(problem, config.method, lambda_b,
                       batch ? &batch.value() : nullptr, config.offset_collocation);
    loss.set_network(std::move(net));

    const auto t0 = std::chrono::steady_clock::now();
    double best_l2 = std::numeric_limits<double>::infinity();

    auto callback = [&](const OptimStepInfo& info, std::span<const double> packed) -> bool {
        MetricsRow row;
        row.step = info.step;
        row.interior = loss.last_interior();
        row.boundary = loss.last_boundary();
        row.total = row.interior + lambda_b * row.boundary;
        row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (info.linesearch_fallback) ++metrics.linesearch_fallbacks;
        const bool sample_l2 = config.l2_every > 0 &&
                               (info.step % config.l2_every == 0 || info.step == config.steps);
        if (sample_l2) {
            loss.unpack(packed);
            row.l2 = l2_relative_error(loss.params(), problem);
            row.has_l2 = true;
            best_l2 = std::min(best_l2, row.l2);
        }
        metrics.rows.push_back(row);
        if (row.has_l2 && config.early_stop_l2 > 0.0 && row.l2 < config.early_stop_l2) return false;
        return true;
    };

    Objective objective = [&loss](std::span<const double> packed, std::span<double> grad) {
        return loss(packed, grad);
    };

    const std::vector<double> theta0 = loss.pack();
    OptimResult opt;
    if (config.optimizer == OptimizerKind::Gd) {
        AdamConfig a = config.adam;
        a.steps = config.steps;
        opt = adam_run(a, theta0, objective, callback);
    } else {
        LbfgsConfig l = config.lbfgs;
        l.steps = config.steps;
        opt = lbfgs_run(l, theta0, objective, callback);
    }
    metrics.aborted_nonfinite = opt.aborted_nonfinite;

    loss.unpack(opt.theta);
    result.params = loss.params();
    result.final_l2 = l2_relative_error(result.params, problem);
    result.best_l2 = std::min(best_l2, result.final_l2);
    return result;
}

void write_metrics_csv(const RunMetrics& metrics, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    std::fprintf(f, "step,total_loss,interior_loss,boundary_loss,l2_rel_err,wall_s\n");
    for (const auto& row : metrics.rows) {
        if (row.has_l2)
            std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", row.step, row.total, row.interior,
                         row.boundary, row.l2, row.wall_s);
        else
            std::fprintf(f, "%d,%.17g,%.17g,%.17g,,%.3f\n", row.step, row.total, row.interior,
                         row.boundary, row.wall_s);
    }
    std::fclose(f);
}

RunMetrics read_metrics_csv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "r");
    if (!f) throw std::runtime_error("read_metrics_csv: cannot open " + path);
    RunMetrics m;
    char line[512];
    bool header = true;
    while (std::fgets(line, sizeof line, f)) {
        if (header) {
            header = false;
            continue;
        }
        MetricsRow row;
        char l2field[64] = {0};
        // l2 field may be empty; parse by splitting.
        int step;
        double total, interior, boundary, wall;
        char* s = line;
        auto next_field = [&s]() {
            char* start = s;
            while (*s && *s != ',' && *s != '\n') ++s;
            if (*s) *s++ = 0;
            return start;
        };
        step = std::atoi(next_field());
        total = std::atof(next_field());
        interior = std::atof(next_field());
        boundary = std::atof(next_field());
        std::strncpy(l2field, next_field(), sizeof l2field - 1);
        wall = std::atof(next_field());
        row.step = step;
        row.total = total;
        row.interior = interior;
        row.boundary = boundary;
        row.wall_s = wall;
        if (l2field[0] != 0) {
            row.l2 = std::atof(l2field);
            row.has_l2 = true;
        }
        m.rows.push_back(row);
    }
    std::fclose(f);
    return m;
}

}  // namespace svpinn
