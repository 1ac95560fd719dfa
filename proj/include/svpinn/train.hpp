#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svpinn/net.hpp"
#include "svpinn/optim.hpp"
#include "svpinn/problems.hpp"
#include "svpinn/sampler.hpp"
#include "svpinn/weak_norms.hpp"

namespace svpinn {

enum class Method { Pinn, Svpinn };
enum class OptimizerKind { Gd, Lbfgs };

struct TrainConfig {
    Method method = Method::Svpinn;
    OptimizerKind optimizer = OptimizerKind::Lbfgs;
    int steps = 1000;
    double lambda_b = 0.0;   // boundary weight; 0 only makes sense with hard boundary
    bool tau_balanced = false;
    double tau = 1.0;
    std::size_t batch_rows = 4000;
    std::uint64_t batch_seed = 1;
    std::uint64_t init_seed = 1;

    int width = 64;
    int hidden = 2;
    double init_scale = 1.0;  // multiplies the Glorot draw; < 1 tames the
                              // super-Nyquist intermodulation of narrow nets
    FeatureKind features = FeatureKind::Daff;
    int feature_count = 64;  // Daff mode count or Fourier frequency rows
    int daff_max_component = 64;
    double sigma_ff = 5.0;
    bool hard_boundary = true;

    int l2_every = 10;
    double early_stop_l2 = 0.0;  // stop once the L2 error drops below; 0 disables
    bool offset_collocation = false;

    AdamConfig adam;
    LbfgsConfig lbfgs;
};

struct MetricsRow {
    int step = 0;
    double total = 0.0;
    double interior = 0.0;
    double boundary = 0.0;
    double l2 = 0.0;
    bool has_l2 = false;
    double wall_s = 0.0;
};

struct RunMetrics {
    std::vector<MetricsRow> rows;
    int linesearch_fallbacks = 0;
    bool aborted_nonfinite = false;
    double tau_used = 1.0;
    bool tau_was_balanced = false;
};

struct TrainResult {
    NetworkParams params;
    RunMetrics metrics;
    double final_l2 = 0.0;
    double best_l2 = 0.0;
};

// Interior + boundary loss of one parameter vector, with the gradient over
// the trainable entries. The batch pointer is null in PINN mode.
class LossEvaluator {
  public:
    LossEvaluator(const ProblemSpec& problem, Method method, double lambda_b,
                  const TestFunctionBatch* batch, bool offset_collocation);

    NetworkParams& params() { return params_; }
    const NetworkParams& params() const { return params_; }
    void set_network(NetworkParams params);

    std::size_t packed_size() const { return trainable_.size(); }
    std::vector<double> pack() const;
    void unpack(std::span<const double> packed);

    // Loss and gradient at the given packed parameters.
    double operator()(std::span<const double> packed, std::span<double> grad);

    // Loss only (no gradient); also used for tau balancing.
    double loss_only(std::span<const double> packed);

    double last_interior() const { return last_interior_; }
    double last_boundary() const { return last_boundary_; }
    double lambda_b() const { return lambda_b_; }

    // Residual field at the current parameters, on the collocation grid.
    ResidualField residual_field();

  private:
    double evaluate(std::span<const double> packed, std::span<double>* grad);

    ProblemSpec problem_;
    Method method_;
    double lambda_b_;
    const TestFunctionBatch* batch_;
    NetworkParams params_;
    std::vector<std::size_t> trainable_;
    std::vector<Point> residual_points_;
    std::vector<double> f_values_;
    std::vector<double> g_values_;
    std::optional<BlockEvaluator> jet_eval_;
    std::optional<BlockEvaluator> val_eval_;
    double last_interior_ = 0.0;
    double last_boundary_ = 0.0;
};

// tau^2 = boundary loss / interior loss at the initial parameters, with the
// interior loss computed from a unit-scale batch. Throws when either side is
// zero at the initial point.
double balance_tau(LossEvaluator& eval_with_unit_batch);

// sqrt(sum (u_theta - u)^2 / sum u^2) over the problem's test points.
double l2_relative_error(const NetworkParams& params, const ProblemSpec& problem);

TrainResult run_training(const ProblemSpec& problem, const TrainConfig& config);

void write_metrics_csv(const RunMetrics& metrics, const std::string& path);
RunMetrics read_metrics_csv(const std::string& path);

}  // namespace svpinn
