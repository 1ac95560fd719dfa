#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svpinn/spectral_basis.hpp"

namespace svpinn {

enum class FeatureKind { Daff, Fourier, Identity };

// Input encoding fed to the modified MLP. Daff rows vanish identically on the
// boundary of the cube; Fourier rows are sin/cos of fixed Gaussian frequencies.
struct FeatureMap {
    FeatureKind kind = FeatureKind::Identity;
    int d = 1;
    std::vector<EigenIndex> indices;  // Daff
    std::vector<double> freq;         // Fourier, F x d row-major
    double sigma_ff = 0.0;

    int output_dim() const {
        switch (kind) {
            case FeatureKind::Daff: return static_cast<int>(indices.size());
            case FeatureKind::Fourier: return 2 * static_cast<int>(freq.size()) / d;
            case FeatureKind::Identity: return d;
        }
        return d;
    }
};

FeatureMap make_daff_features(int d, int m, int max_component);
FeatureMap make_fourier_features(int d, int rows, double sigma, std::uint64_t seed);
FeatureMap make_identity_features(int d);

// Flat parameter layout of the modified MLP: the two encoders, K hidden
// layers with multiplicative residual mixing, and a linear readout. With
// hidden == 0 the readout acts on the features directly and the encoders
// are absent.
struct NetShape {
    int in_dim = 1;
    int width = 1;
    int hidden = 0;

    std::size_t off_w1 = 0, off_b1 = 0, off_w2 = 0, off_b2 = 0;
    std::vector<std::size_t> off_w;  // W^1..W^{K+1}
    std::vector<std::size_t> off_b;
    std::size_t nparams = 0;

    int w_rows(int l) const;  // l in 0..hidden (0 = W^1, hidden = readout)
    int w_cols(int l) const;
};

NetShape make_shape(int in_dim, int width, int hidden);

struct NetworkParams {
    NetShape shape;
    FeatureMap fmap;
    bool hard_boundary = false;  // biases frozen at zero; requires Daff features
    std::vector<double> theta;
};

NetworkParams make_network(const FeatureMap& fmap, int width, int hidden, bool hard_boundary);

// Glorot-uniform weights, zero biases. Deterministic per (seed, matrix).
void glorot_init(NetworkParams& params, std::uint64_t seed);

// Indices of theta entries the optimizer may move.
std::vector<std::size_t> trainable_indices(const NetworkParams& params);

// Value, gradient and pure second derivatives at a point.
struct EvalJet {
    double value = 0.0;
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    std::array<double, 3> second{0.0, 0.0, 0.0};
};

// Cotangent paired with EvalJet for reverse-mode parameter gradients.
struct JetCotangent {
    double value = 0.0;
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    std::array<double, 3> second{0.0, 0.0, 0.0};
};

// Straightforward per-point evaluation; reference path for BlockEvaluator.
double forward(const NetworkParams& params, const std::array<double, 3>& x);
EvalJet eval_jet(const NetworkParams& params, const std::array<double, 3>& x);

// Blocked evaluator used by the training loop: processes points in fixed-size
// blocks with column-major kernels, stores activations per block, and
// backpropagates jet cotangents into a flat parameter gradient. Gradients
// accumulate over a fixed number of block groups in a fixed order, so results
// do not depend on the number of OpenMP threads.
class BlockEvaluator {
  public:
    static constexpr int kBlock = 16;
    static constexpr int kGroups = 32;

    BlockEvaluator(const NetShape& shape, const FeatureMap& fmap, bool with_jets);

    // Values (and jets when enabled) for all points.
    void evaluate(const NetworkParams& params, std::span<const std::array<double, 3>> points,
                  std::vector<EvalJet>& jets_out) const;

    // d/dtheta of sum_i <cotangents[i], jet_i>; adds into grad (size nparams).
    // Runs a fused forward+backward pass.
    void accumulate_gradient(const NetworkParams& params,
                             std::span<const std::array<double, 3>> points,
                             std::span<const JetCotangent> cotangents,
                             std::span<double> grad) const;

    bool with_jets() const { return with_jets_; }

  private:
    NetShape shape_;
    FeatureMap fmap_;
    bool with_jets_;
    int channels_;
};

// L u_theta at a point, assembled from the jet.
struct OperatorSpec {
    enum class Kind { NegLaplacian, Helmholtz, DivergenceForm };
    Kind kind = Kind::NegLaplacian;
    int d = 1;
    double k = 0.0;  // Helmholtz
    std::function<double(const std::array<double, 3>&)> a;
    std::function<std::array<double, 3>(const std::array<double, 3>&)> grad_a;
};

double apply_operator(const OperatorSpec& op, const EvalJet& jet, const std::array<double, 3>& x);

// Cotangent on the jet of a point given cotangent q on L u_theta(x).
JetCotangent operator_cotangent(const OperatorSpec& op, const std::array<double, 3>& x, double q);

// Versioned checkpoint: header, shape table, row-major binary64 parameters.
void save_checkpoint(const NetworkParams& params, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace svpinn
