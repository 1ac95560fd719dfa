#include "svpinn/optim.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace svpinn {

namespace {

double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

double adam_lr_at_step(const AdamConfig& cfg, int step) {
    const int k = step / cfg.decay_every;
    return cfg.lr0 * std::pow(cfg.decay, k);
}

OptimResult adam_run(const AdamConfig& cfg, std::span<const double> theta0, const Objective& fn,
                     const StepCallback& cb) {
    const std::size_t n = theta0.size();
    OptimResult res;
    res.theta.assign(theta0.begin(), theta0.end());
    std::vector<double> g(n), m(n, 0.0), v(n, 0.0);

    for (int step = 0; step < cfg.steps; ++step) {
        const double loss = fn(res.theta, g);
        ++res.function_evals;
        if (!std::isfinite(loss)) {
            res.aborted_nonfinite = true;
            res.final_loss = loss;
            return res;
        }
        const double lr = adam_lr_at_step(cfg, step);
        const double bc1 = 1.0 - std::pow(cfg.beta1, step + 1);
        const double bc2 = 1.0 - std::pow(cfg.beta2, step + 1);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            res.theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
        }
        res.steps_taken = step + 1;
        res.final_loss = loss;
        if (cb) {
            OptimStepInfo info;
            info.step = step + 1;
            info.loss = loss;
            info.grad_norm = max_norm(g);
            info.step_length = lr;
            if (!cb(info, res.theta)) break;
        }
    }
    return res;
}

namespace {

struct LinesearchResult {
    double alpha = 0.0;
    double f = 0.0;
    bool ok = false;
    bool armijo = false;
    int evals = 0;
};

// Strong-Wolfe line search with the standard bracket-then-zoom structure;
// the zoom step bisects with a quadratic-interpolation safeguard.
LinesearchResult strong_wolfe(const Objective& fn, std::span<const double> theta,
                              std::span<const double> dir, double f0, double dphi0,
                              double alpha_init, std::vector<double>& theta_trial,
                              std::vector<double>& g_trial, const LbfgsConfig& cfg) {
    const std::size_t n = theta.size();
    LinesearchResult out;

    auto eval = [&](double alpha, double& f, double& dphi) {
        for (std::size_t i = 0; i < n; ++i) theta_trial[i] = theta[i] + alpha * dir[i];
        f = fn(theta_trial, g_trial);
        dphi = dot(g_trial, dir);
        ++out.evals;
    };

    auto zoom = [&](double lo, double f_lo, double dphi_lo, double hi, double f_hi) {
        for (int it = 0; it < cfg.max_linesearch; ++it) {
            // Quadratic interpolation on (lo, f_lo, dphi_lo, hi, f_hi),
            // safeguarded toward bisection.
            double alpha;
            const double denom = 2.0 * (f_hi - f_lo - dphi_lo * (hi - lo));
            if (denom != 0.0) {
                alpha = lo - dphi_lo * (hi - lo) * (hi - lo) / denom;
                const double a = std::min(lo, hi), b = std::max(lo, hi);
                const double margin = 0.1 * (b - a);
                if (!(alpha > a + margin && alpha < b - margin)) alpha = 0.5 * (lo + hi);
            } else {
                alpha = 0.5 * (lo + hi);
            }
            double f, dphi;
            eval(alpha, f, dphi);
            if (!std::isfinite(f)) {
                hi = alpha;
                f_hi = f0;  // shrink toward lo
                continue;
            }
            if (f > f0 + cfg.c1 * alpha * dphi0 || f >= f_lo) {
                hi = alpha;
                f_hi = f;
            } else {
                if (std::abs(dphi) <= -cfg.c2 * dphi0) {
                    out.alpha = alpha;
                    out.f = f;
                    out.ok = true;
                    out.armijo = true;
                    return;
                }
                if (dphi * (hi - lo) >= 0.0) {
                    hi = lo;
                    f_hi = f_lo;
                }
                lo = alpha;
                f_lo = f;
                dphi_lo = dphi;
            }
            if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
        }
    };

    double alpha_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double alpha = alpha_init;
    for (int it = 0; it < cfg.max_linesearch; ++it) {
        double f, dphi;
        eval(alpha, f, dphi);
        if (!std::isfinite(f)) {
            // Retreat: treat as a too-long step.
            zoom(alpha_prev, f_prev, dphi_prev, alpha, f0);
            return out;
        }
        if (f > f0 + cfg.c1 * alpha * dphi0 || (it > 0 && f >= f_prev)) {
            zoom(alpha_prev, f_prev, dphi_prev, alpha, f);
            return out;
        }
        if (std::abs(dphi) <= -cfg.c2 * dphi0) {
            out.alpha = alpha;
            out.f = f;
            out.ok = true;
            out.armijo = true;
            return out;
        }
        if (dphi >= 0.0) {
            zoom(alpha, f, dphi, alpha_prev, f_prev);
            return out;
        }
        alpha_prev = alpha;
        f_prev = f;
        dphi_prev = dphi;
        alpha *= 2.0;
    }
    return out;
}

}  // namespace

OptimResult lbfgs_run(const LbfgsConfig& cfg, std::span<const double> theta0, const Objective& fn,
                      const StepCallback& cb) {
    const std::size_t n = theta0.size();
    OptimResult res;
    res.theta.assign(theta0.begin(), theta0.end());

    std::vector<double> g(n), g_new(n), dir(n), theta_trial(n);
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;

    double f = fn(res.theta, g);
    ++res.function_evals;
    res.final_loss = f;
    if (!std::isfinite(f)) {
        res.aborted_nonfinite = true;
        return res;
    }
    if (max_norm(g) <= cfg.grad_tol) {
        res.converged_gradient = true;
        return res;
    }

    for (int step = 0; step < cfg.steps; ++step) {
        // Two-loop recursion.
        for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
        std::vector<double> alpha_mem(S.size());
        for (std::size_t hi = S.size(); hi-- > 0;) {
            const double a = rho[hi] * dot(S[hi], dir);
            alpha_mem[hi] = a;
            for (std::size_t i = 0; i < n; ++i) dir[i] -= a * Y[hi][i];
        }
        if (!S.empty()) {
            const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
            for (std::size_t i = 0; i < n; ++i) dir[i] *= gamma;
        }
        for (std::size_t hi = 0; hi < S.size(); ++hi) {
            const double b = rho[hi] * dot(Y[hi], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_mem[hi] - b) * S[hi][i];
        }

        double dphi0 = dot(g, dir);
        if (dphi0 >= 0.0) {
            // Not a descent direction: drop the history and restart steepest.
            S.clear();
            Y.clear();
            rho.clear();
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            dphi0 = dot(g, dir);
        }

        const double alpha_init = S.empty() ? std::min(1.0, 1.0 / std::max(1.0, norm2(g))) : 1.0;
        LinesearchResult ls =
            strong_wolfe(fn, res.theta, dir, f, dphi0, alpha_init, theta_trial, g_new, cfg);
        res.function_evals += ls.evals;

        bool fallback = false;
        if (!ls.ok) {
            // Backtracking steepest-descent step; recorded as a fallback event.
            ++res.linesearch_failures;
            fallback = true;
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            dphi0 = dot(g, dir);
            double alpha = std::min(1.0, 1.0 / std::max(1.0, norm2(g)));
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                for (std::size_t i = 0; i < n; ++i) theta_trial[i] = res.theta[i] + alpha * dir[i];
                const double ft = fn(theta_trial, g_new);
                ++res.function_evals;
                if (std::isfinite(ft) && ft <= f + cfg.c1 * alpha * dphi0) {
                    ls.alpha = alpha;
                    ls.f = ft;
                    ls.ok = true;
                    ls.armijo = true;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;  // step underflow; give up
            S.clear();
            Y.clear();
            rho.clear();
        }

        // Accept the step.
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = theta_trial[i] - res.theta[i];
            y[i] = g_new[i] - g[i];
        }
        res.theta = theta_trial;
        f = ls.f;
        g = g_new;
        res.steps_taken = step + 1;
        res.final_loss = f;

        const double sy = dot(s, y);
        if (sy > 1e-10 * norm2(s) * norm2(y)) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > cfg.history) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }

        if (cb) {
            OptimStepInfo info;
            info.step = step + 1;
            info.loss = f;
            info.grad_norm = max_norm(g);
            info.step_length = ls.alpha;
            info.armijo_ok = ls.armijo;
            info.linesearch_fallback = fallback;
            if (!cb(info, res.theta)) return res;
        }
        if (!std::isfinite(f)) {
            res.aborted_nonfinite = true;
            return res;
        }
        if (max_norm(g) <= cfg.grad_tol) {
            res.converged_gradient = true;
            return res;
        }
    }
    return res;
}

}  // namespace svpinn
