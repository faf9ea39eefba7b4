#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stratlearn/common.hpp"
#include "stratlearn/nn.hpp"

namespace stratlearn::movae {

// Stratified mixture of VAEs: K expert encoder/decoder pairs with assigned
// target dimensions, a gating network, and global mixture logits.

struct MoVaeExpert {
  nn::MlpParams encoder;  // D -> 2 * latent_dim (mean and log-variance heads)
  nn::MlpParams decoder;  // latent_dim -> D
  int target_dim = 1;
};

struct MoVaeModel {
  std::vector<MoVaeExpert> experts;
  nn::MlpParams gate;      // D -> K logits
  Vector mixture_logits;   // pi
  int latent_dim = 0;

  int n_experts() const { return int(experts.size()); }
  int data_dim() const { return experts.at(0).encoder.input_dim(); }
  void validate() const;
};

struct MoVaeHyper {
  double beta = 0.01;      // latent-KL weight during phase 1
  double beta_end = 0.5;   // linear ramp target during phase 2
  double beta_g = 0.01;    // gate-KL weight
  double gamma = 1.0;      // projection-penalty weight
  double tau_start = 2.0;  // Gumbel temperature, geometric decay
  double tau_end = 0.1;
  int epochs_phase1 = 2000;
  int epochs_phase2 = 2000;
  int batch = 256;
  double recon_sigma = 1.0;  // Gaussian decoder scale; 1 = plain squared error
};

enum class GateMode { Soft, GumbelSample };

// Soft: softmax of the gate logits. GumbelSample: softmax((logits + G)/tau)
// with G i.i.d. Gumbel. Entries are positive and sum to 1.
Vector gate_posterior(const MoVaeModel& model,
                      const Eigen::Ref<const Vector>& x, double tau,
                      GateMode mode, std::uint64_t seed = 0);

// (1/d) sum_{i<=d} (s_i - 1)^2 + (1/(D-d)) sum_{i>d} s_i^2 over the decoder
// Jacobian's singular values, zero-padded to length D.
double projection_penalty(const Eigen::Ref<const Vector>& singular_values,
                          int target_dim, int ambient_dim);

struct MoVaeGradients {
  std::vector<nn::MlpGrads> encoders, decoders;
  nn::MlpGrads gate;
  Vector mixture_logits;
};
MoVaeGradients zero_gradients(const MoVaeModel& model);

struct LossWeights {
  double beta = 0.01;
  double beta_g = 0.01;
  double gamma = 1.0;
  double recon_sigma = 1.0;
  double tau = 1.0;
  GateMode mode = GateMode::Soft;
};

struct LossValue {
  double total = 0.0;
  double recon = 0.0;      // gate-weighted components, for logging
  double kl = 0.0;
  double gate_kl = 0.0;
  double penalty = 0.0;
  Vector gate_mass;        // mean posterior mass per expert over the batch
};

// Batch loss L = (1/B) sum_x sum_k h_k(x) l_k(x) with
// l_k = |x - dec(z)|^2 / recon_sigma^2 + beta KL(q || N(0,I))
//       - beta_g (log w_k - log h_k) + gamma P_k,
// z reparameterized; the penalty gradient treats decoder activation masks
// as constants at the evaluation point. Reparameterization and Gumbel noise
// are drawn from `seed`, so the loss is a deterministic function of
// (model, batch, weights, seed). Columns of `batch` are samples.
LossValue movae_loss(const MoVaeModel& model,
                     const Eigen::Ref<const Matrix>& batch,
                     const LossWeights& weights, std::uint64_t seed,
                     MoVaeGradients* gradients);

// Frozen-routing variant: per-column hard assignments (0-based); gate and
// mixture logits receive no gradient and the gate-KL term is dropped.
LossValue movae_loss_frozen(const MoVaeModel& model,
                            const Eigen::Ref<const Matrix>& batch,
                            const IntVector& assignments,
                            const LossWeights& weights, std::uint64_t seed,
                            MoVaeGradients* gradients);

struct MoVaeTrainConfig {
  std::vector<int> expert_dims;  // target dimension per expert
  int latent_dim = 4;
  std::vector<int> enc_hidden = {256, 256};
  std::vector<int> dec_hidden = {256, 256};
  std::vector<int> gate_hidden = {128};
  MoVaeHyper hyper;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct MoVaeTrainResult {
  MoVaeModel model;
  IntVector routing;        // 1..K, argmax of the soft gate
  Matrix soft_probs;        // n x K
  std::vector<double> loss_trace;
  std::vector<std::string> warnings;
};

// Phase 1: Gumbel routing with tau annealed geometrically and beta fixed.
// Phase 2: routing frozen to the soft-gate argmax, beta ramped linearly to
// beta_end, only expert parameters updated. Each epoch is one minibatch
// Adam step. Deterministic given seed.
MoVaeTrainResult train_movae(const Eigen::Ref<const Matrix>& points,
                             const MoVaeTrainConfig& config);

struct GeneratedSamples {
  Matrix samples;    // n x D
  IntVector labels;  // 1..K, the sampled expert
};

// C ~ Categorical(softmax(pi)), z ~ N(0, I_latent), output decode_C(z).
GeneratedSamples movae_generate(const MoVaeModel& model, Eigen::Index n,
                                std::uint64_t seed);

void save_movae(const MoVaeModel& model, const std::string& path);
MoVaeModel load_movae(const std::string& path);

// Routing CSV with rows (index, expert, p_1..p_K).
void save_routing(const IntVector& routing, const Matrix& soft_probs,
                  const std::string& path);

}  // namespace stratlearn::movae
