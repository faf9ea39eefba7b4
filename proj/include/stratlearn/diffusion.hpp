#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stratlearn/common.hpp"
#include "stratlearn/nn.hpp"
#include "stratlearn/strata.hpp"

namespace stratlearn::diffusion {

// Continuous-time VP forward process with linear drift
// beta(t) = beta_min + (beta_max - beta_min) t / T, so the conditional
// marginal of x_t given x_0 is N(m_t x_0, sigma_t^2 I) with
// m_t = exp(-int_0^t beta) and sigma_t^2 = 1 - m_t^2.
struct NoiseSchedule {
  double beta_min = 0.1;
  double beta_max = 20.0;
  double horizon = 1.0;  // T

  double beta(double t) const {
    return beta_min + (beta_max - beta_min) * t / horizon;
  }
  double int_beta(double t) const {  // closed-form integral of the linear beta
    return beta_min * t + 0.5 * (beta_max - beta_min) * t * t / horizon;
  }
  void validate() const;
};

// (m_t, sigma_t); throws DomainError for t outside [0, T].
std::pair<double, double> schedule_moments(const NoiseSchedule& schedule,
                                           double t);

// x_t = m_t x0 + sigma_t eps with eps ~ N(0, I). Returns (x_t, eps).
std::pair<Vector, Vector> perturb(const Eigen::Ref<const Vector>& x0, double t,
                                  const NoiseSchedule& schedule,
                                  std::uint64_t seed);

// Trained DDPM: eps_net takes [x; time_embed(t)] and predicts the noise.
struct DiffusionModel {
  nn::MlpParams eps_net;
  nn::MlpParams time_embed;
  NoiseSchedule schedule;
  int data_dim = 0;

  void validate() const;
  // Columns are samples; ts holds the per-column time.
  Matrix eps_batch(const Eigen::Ref<const Matrix>& x,
                   const Eigen::Ref<const Vector>& ts) const;
  // Tweedie: score = -eps(x, t) / sigma_t.
  Matrix score_batch(const Eigen::Ref<const Matrix>& x,
                     const Eigen::Ref<const Vector>& ts) const;
};

// One Gaussian stratum after diagonalizing its intrinsic covariance:
// the marginal at time t is N(m_t mean, c I + m_t^2 basis diag(spectrum)
// basis^T) with c = m_t^2 sigma*^2 + sigma_t^2.
struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix basis;     // D x d, orthonormal columns; d = 0 is a point mass
  Vector spectrum;  // d eigenvalues of the intrinsic covariance
};

// Exact score oracle for a mixture of affine Gaussian strata convolved with
// isotropic noise. Responsibilities are computed in log space.
struct GaussianStrataMixture {
  std::vector<GaussianComponent> components;
  double noise_sigma = 0.0;
  NoiseSchedule schedule;

  static GaussianStrataMixture from_spec(const strata::StratifiedSpaceSpec& spec);
  static GaussianStrataMixture point_mass(const Vector& mean,
                                          double noise_sigma);

  int dim() const { return int(components.at(0).mean.size()); }
  double log_density(const Eigen::Ref<const Vector>& x, double t) const;
  // Posterior weights omega_k p_{k,t}(x) / p_t(x); nonnegative, sum to 1.
  Vector responsibilities(const Eigen::Ref<const Vector>& x, double t) const;
  Vector component_score(int k, const Eigen::Ref<const Vector>& x,
                         double t) const;
  Vector score(const Eigen::Ref<const Vector>& x, double t) const;
};

// Either a trained model or the analytic oracle; both expose score(x, t).
struct ScoreSource {
  std::variant<DiffusionModel, GaussianStrataMixture> source;

  ScoreSource(DiffusionModel m) : source(std::move(m)) {}
  ScoreSource(GaussianStrataMixture m) : source(std::move(m)) {}

  int dim() const;
  const NoiseSchedule& schedule() const;
  Vector score(const Eigen::Ref<const Vector>& x, double t) const;
  Matrix score_batch(const Eigen::Ref<const Matrix>& x,
                     const Eigen::Ref<const Vector>& ts) const;
};

struct TrainConfig {
  int steps = 20000;
  int batch = 128;
  double lr = 1e-3;
  double lr_final = 1e-4;   // cosine decay target over the run
  int warmup_steps = 500;   // linear ramp before the cosine decay
  double adam_beta2 = 0.999;
  double ema_decay = 0.999; // evaluation weights; 0 disables averaging
  double t_floor = 1e-4;  // training times ~ Uniform(t_floor, T)
  std::vector<int> hidden_widths = {512, 512, 512};
  std::vector<int> time_embed_widths = {64, 64};  // layer sizes after input 1
  NoiseSchedule schedule;
  std::uint64_t seed = 0;
};

struct TrainResult {
  DiffusionModel model;
  std::vector<double> loss_trace;  // one entry per step
};

// eps-prediction objective: mean over the minibatch of |eps_net(x_t, t) -
// eps|^2 with t ~ Uniform(t_floor, T). Deterministic given seed.
TrainResult train_diffusion(const Eigen::Ref<const Matrix>& points,
                            const TrainConfig& config);

struct ReverseSamples {
  Matrix samples;                    // n x D; truncated rows zeroed
  std::vector<std::uint8_t> truncated;
  Eigen::Index n_truncated() const;
};

// Euler-Maruyama integration of the reverse SDE
//   dY = [beta_{T-t} Y + 2 beta_{T-t} score(Y, T-t)] dt + sqrt(2 beta_{T-t}) dW
// from Y_0 ~ N(0, I) at t = 0 to t = T - tau. Rows with |Y|_inf > trunc_L
// are zeroed and flagged. Per-chain sub-streams make the result independent
// of batching and thread count.
ReverseSamples sample_reverse(const ScoreSource& source, Eigen::Index n,
                              int steps, double tau, double trunc_L,
                              std::uint64_t seed, int n_threads = 1);

// Checkpoint: nn JSON plus {schedule, data_dim}.
void save_diffusion(const DiffusionModel& model, const std::string& path);
DiffusionModel load_diffusion(const std::string& path);

// Loss trace CSV with rows (step, loss).
void save_loss_trace(const std::vector<double>& trace, const std::string& path);

}  // namespace stratlearn::diffusion
