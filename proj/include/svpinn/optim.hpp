#pragma once

#include <functional>
#include <span>
#include <vector>

namespace svpinn {

// Objective fills grad (same size as theta) and returns the loss.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

struct OptimStepInfo {
    int step = 0;            // outer iteration, 1-based on completion
    double loss = 0.0;
    double grad_norm = 0.0;  // max-norm
    double step_length = 0.0;
    bool armijo_ok = true;           // sufficient-decrease condition of the accepted step
    bool linesearch_fallback = false;
};

// Return false to stop the run early.
using StepCallback = std::function<bool(const OptimStepInfo&, std::span<const double>)>;

struct OptimResult {
    std::vector<double> theta;
    int steps_taken = 0;
    int function_evals = 0;
    int linesearch_failures = 0;
    bool aborted_nonfinite = false;
    bool converged_gradient = false;
    double final_loss = 0.0;
};

struct AdamConfig {
    double lr0 = 1e-3;
    double decay = 0.9;  // multiplicative, applied every decay_every steps
    int decay_every = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int steps = 1000;
};

double adam_lr_at_step(const AdamConfig& cfg, int step);

OptimResult adam_run(const AdamConfig& cfg, std::span<const double> theta0, const Objective& fn,
                     const StepCallback& cb = nullptr);

struct LbfgsConfig {
    int history = 200;
    double grad_tol = 1e-9;  // max-norm stop
    double c1 = 1e-4;        // sufficient decrease
    double c2 = 0.9;         // curvature
    int max_linesearch = 40;
    int steps = 1000;
};

OptimResult lbfgs_run(const LbfgsConfig& cfg, std::span<const double> theta0, const Objective& fn,
                      const StepCallback& cb = nullptr);

}  // namespace svpinn
