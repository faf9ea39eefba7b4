#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stratlearn/common.hpp"

namespace stratlearn::nn {

// Activation applied after every layer except the last.
struct Activation {
  enum class Kind { ReLU, LeakyReLU, Identity };
  Kind kind = Kind::ReLU;
  double slope = 0.2;  // LeakyReLU only

  static Activation relu() { return {Kind::ReLU, 0.0}; }
  static Activation leaky_relu(double s = 0.2) { return {Kind::LeakyReLU, s}; }
  static Activation identity() { return {Kind::Identity, 0.0}; }

  double apply(double x) const {
    switch (kind) {
      case Kind::ReLU: return x > 0.0 ? x : 0.0;
      case Kind::LeakyReLU: return x > 0.0 ? x : slope * x;
      case Kind::Identity: return x;
    }
    return x;
  }

  // Derivative at exactly 0 uses the positive branch (slope 1).
  double deriv(double x) const {
    switch (kind) {
      case Kind::ReLU: return x >= 0.0 ? 1.0 : 0.0;
      case Kind::LeakyReLU: return x >= 0.0 ? 1.0 : slope;
      case Kind::Identity: return 1.0;
    }
    return 1.0;
  }
};

// Dense MLP parameters. weights[i] has shape layer_sizes[i+1] x layer_sizes[i].
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_layers() const { return int(weights.size()); }
};

// Pre- and post-activation values for each layer; enough for an exact
// backward pass. Columns are samples throughout.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre[i]  = W_i a_{i-1} + b_i
  std::vector<Matrix> post;  // post[i] = act(pre[i]) except the last layer
};

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// He-uniform fan-in init: W_ij ~ U(-a, a) with a = sqrt(6 / fan_in),
// biases zero. Deterministic given seed.
MlpParams mlp_init(const std::vector<int>& layer_sizes, Activation activation,
                   std::uint64_t seed);

MlpGrads zero_grads(const MlpParams& params);
void accumulate(MlpGrads& into, const MlpGrads& grads, double scale = 1.0);

// inputs: (input_dim x batch). Returns (output_dim x batch).
Matrix mlp_forward(const MlpParams& params,
                   const Eigen::Ref<const Matrix>& inputs,
                   ForwardCache* cache = nullptr);

// output_grads: dL/d(outputs), same shape as the forward outputs. Returns
// dL/d(inputs); parameter gradients are accumulated into `grads`.
Matrix mlp_backward(const MlpParams& params, const ForwardCache& cache,
                    const Eigen::Ref<const Matrix>& output_grads,
                    MlpGrads& grads);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
  std::int64_t step_count = 0;
  AdamHyper hyper;
};

AdamState adam_init(const MlpParams& params, AdamHyper hyper = {});
// Standard Adam with bias correction. Throws NumericError naming the layer
// if a gradient entry is non-finite.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);

// Plain-vector variant (used for mixture logits).
struct AdamVecState {
  Vector m, v;
  std::int64_t step_count = 0;
  AdamHyper hyper;
};
AdamVecState adam_vec_init(Eigen::Index n, AdamHyper hyper = {});
void adam_vec_step(Vector& params, const Vector& grad, AdamVecState& state);

// Exact Jacobian of the network at `latent`: chains layer weight matrices
// with diagonal activation-derivative masks at the cached pre-activations.
Matrix decoder_jacobian(const MlpParams& params,
                        const Eigen::Ref<const Vector>& latent);

// Checkpoint: {format_version, layer_sizes, activation, weights, biases}.
std::string mlp_to_json_string(const MlpParams& params);
MlpParams mlp_from_json_string(const std::string& text);
void save_mlp(const MlpParams& params, const std::string& path);
MlpParams load_mlp(const std::string& path);

}  // namespace stratlearn::nn
