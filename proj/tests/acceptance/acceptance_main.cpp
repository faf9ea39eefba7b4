// Acceptance suite: runs the project's quantitative criteria end to end and
// prints one pass/fail line per criterion. Invoke with criterion numbers to
// run a subset (used by ctest), or with no arguments to run everything.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "stratlearn/baselines.hpp"
#include "stratlearn/diffusion.hpp"
#include "stratlearn/lid.hpp"
#include "stratlearn/metrics.hpp"
#include "stratlearn/movae.hpp"
#include "stratlearn/nn.hpp"
#include "stratlearn/rng.hpp"
#include "stratlearn/strata.hpp"

using namespace stratlearn;

namespace {

constexpr int kThreads = 2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// ---------------------------------------------------------------- helpers

std::size_t mlp_param_count(const nn::MlpParams& p) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l)
    n += std::size_t(p.weights[l].size() + p.biases[l].size());
  return n;
}

double& mlp_param_at(nn::MlpParams& p, std::size_t index) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    if (index < std::size_t(p.weights[l].size()))
      return p.weights[l].data()[index];
    index -= std::size_t(p.weights[l].size());
    if (index < std::size_t(p.biases[l].size()))
      return p.biases[l].data()[index];
    index -= std::size_t(p.biases[l].size());
  }
  throw std::out_of_range("mlp_param_at");
}

double mlp_grad_at(const nn::MlpGrads& g, std::size_t index) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    if (index < std::size_t(g.weights[l].size()))
      return g.weights[l].data()[index];
    index -= std::size_t(g.weights[l].size());
    if (index < std::size_t(g.biases[l].size()))
      return g.biases[l].data()[index];
    index -= std::size_t(g.biases[l].size());
  }
  throw std::out_of_range("mlp_grad_at");
}

diffusion::GaussianStrataMixture generic_mixture() {
  const int D = 5;
  strata::StratifiedSpaceSpec spec;
  strata::AffineGaussian a;
  a.offset = Vector::Zero(D);
  a.offset(0) = 0.3;
  a.basis = Matrix::Zero(D, 1);
  a.basis(1, 0) = 1.0;
  a.intrinsic_cov = Matrix::Identity(1, 1) * 0.9;
  strata::AffineGaussian b;
  b.offset = Vector::Zero(D);
  b.offset(3) = -0.4;
  b.basis = Matrix::Zero(D, 2);
  b.basis(0, 0) = 1.0;
  b.basis(2, 1) = 1.0;
  Matrix cov(2, 2);
  cov << 1.2, 0.25, 0.25, 0.7;
  b.intrinsic_cov = cov;
  spec.strata = {{a, Vector()}, {b, Vector()}};
  spec.weights = Vector(2);
  spec.weights << 0.45, 0.55;
  spec.noise_sigma = 0.04;
  return diffusion::GaussianStrataMixture::from_spec(spec);
}

// Table-1 style pipeline shared by criteria 6 and 7.
struct ScaledTable1 {
  double ddpm_accuracy = 0.0;
  double lb_accuracy = 0.0;
  double lpca_accuracy = 0.0;
};

ScaledTable1 scaled_table1(double noise_sigma, bool run_baselines,
                           std::uint64_t seed) {
  auto spec = strata::preset("circle_sphere");
  spec.ambient_dim = 20;
  spec.noise_sigma = noise_sigma;
  const auto ds = strata::make_dataset(spec, 4000, seed);

  diffusion::TrainConfig train_cfg;
  train_cfg.steps = 20000;
  train_cfg.batch = 128;
  train_cfg.hidden_widths = {256, 256, 256};
  train_cfg.time_embed_widths = {64, 64};
  train_cfg.seed = derive_stream(seed, "ddpm", 0);
  const auto trained = diffusion::train_diffusion(ds.points, train_cfg);
  const diffusion::ScoreSource source(trained.model);

  lid::LidConfig lid_cfg;
  lid_cfg.t_start = 0.03;
  lid_cfg.t_end = 0.031;
  lid_cfg.n_scores = 500;
  lid_cfg.rule = lid::Rule::Ratio;
  lid_cfg.seed = derive_stream(seed, "lid", 0);
  const IntVector dims = lid::estimate_dims(source, ds.points, lid_cfg, kThreads);
  const auto report = lid::strata_report(dims, 0.01, ds.true_dims);

  ScaledTable1 out;
  out.ddpm_accuracy = report.accuracy;
  if (run_baselines) {
    const auto lb = baselines::levina_bickel(ds.points, 20, kThreads);
    const auto lpca = baselines::local_pca(ds.points, 20, 0.95, kThreads);
    Eigen::Index lb_hits = 0, lpca_hits = 0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      if (lb.rounded(i) == ds.true_dims(i)) ++lb_hits;
      if (lpca.dims(i) == ds.true_dims(i)) ++lpca_hits;
    }
    out.lb_accuracy = double(lb_hits) / double(ds.size());
    out.lpca_accuracy = double(lpca_hits) / double(ds.size());
  }
  return out;
}

// ---------------------------------------------------------------- criteria

Outcome criterion1_gradients() {
  Outcome out;
  double max_rel_backward = 0.0;

  const std::vector<std::vector<int>> archs = {
      {3, 8, 2}, {4, 16, 9, 3}, {2, 5, 7, 6, 2}, {6, 64, 4}};
  int idx = 0;
  for (const auto& sizes : archs) {
    for (auto act : {nn::Activation::relu(), nn::Activation::leaky_relu(0.2)}) {
      auto p = nn::mlp_init(sizes, act, 100 + std::uint64_t(idx++));
      Rng rng(50 + std::uint64_t(idx));
      const Matrix x = rng.normal_matrix(sizes.front(), 3);
      const Matrix g_out = rng.normal_matrix(sizes.back(), 3);
      nn::ForwardCache cache;
      nn::mlp_forward(p, x, &cache);
      auto grads = nn::zero_grads(p);
      nn::mlp_backward(p, cache, g_out, grads);
      const auto eval = [&] {
        return (nn::mlp_forward(p, x).cwiseProduct(g_out)).sum();
      };
      for (std::size_t i = 0; i < mlp_param_count(p); ++i) {
        double& v = mlp_param_at(p, i);
        const double saved = v;
        v = saved + 1e-6;
        const double up = eval();
        v = saved - 1e-6;
        const double down = eval();
        v = saved;
        max_rel_backward =
            std::max(max_rel_backward,
                     rel_err(mlp_grad_at(grads, i), (up - down) / 2e-6));
      }
    }
  }
  if (max_rel_backward >= 1e-4) {
    out.detail = "backward max rel err " + std::to_string(max_rel_backward);
    return out;
  }

  // movae_loss full gradient on a tiny model, frozen-mask penalty.
  movae::MoVaeModel model;
  model.latent_dim = 2;
  const auto act = nn::Activation::leaky_relu(0.2);
  for (int k = 0; k < 2; ++k) {
    movae::MoVaeExpert e;
    e.encoder = nn::mlp_init({3, 8, 4}, act, derive_stream(7, "enc", k));
    e.decoder = nn::mlp_init({2, 8, 3}, act, derive_stream(7, "dec", k));
    e.target_dim = 1 + k;
    model.experts.push_back(std::move(e));
  }
  model.gate = nn::mlp_init({3, 8, 2}, act, derive_stream(7, "gate", 0));
  Rng rng(21);
  model.mixture_logits = 0.2 * rng.normal_vector(2);
  const Matrix batch = rng.normal_matrix(3, 5);

  movae::LossWeights weights;
  weights.beta = 0.15;
  weights.beta_g = 0.05;
  weights.gamma = 0.4;
  weights.tau = 0.8;
  weights.mode = movae::GateMode::GumbelSample;

  movae::MoVaeGradients grads = movae::zero_gradients(model);
  movae::movae_loss(model, batch, weights, 31, &grads);
  const auto eval = [&] {
    return movae::movae_loss(model, batch, weights, 31, nullptr).total;
  };
  double max_rel_movae = 0.0;
  const auto check = [&](nn::MlpParams& params, const nn::MlpGrads& g) {
    for (std::size_t i = 0; i < mlp_param_count(params); ++i) {
      double& v = mlp_param_at(params, i);
      const double saved = v;
      v = saved + 1e-6;
      const double up = eval();
      v = saved - 1e-6;
      const double down = eval();
      v = saved;
      const double fd = (up - down) / 2e-6;
      const double an = mlp_grad_at(g, i);
      if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
      max_rel_movae = std::max(max_rel_movae, rel_err(an, fd));
    }
  };
  for (int k = 0; k < 2; ++k) {
    check(model.experts[std::size_t(k)].encoder, grads.encoders[std::size_t(k)]);
    check(model.experts[std::size_t(k)].decoder, grads.decoders[std::size_t(k)]);
  }
  check(model.gate, grads.gate);
  for (int k = 0; k < 2; ++k) {
    const double saved = model.mixture_logits(k);
    model.mixture_logits(k) = saved + 1e-6;
    const double up = eval();
    model.mixture_logits(k) = saved - 1e-6;
    const double down = eval();
    model.mixture_logits(k) = saved;
    max_rel_movae = std::max(
        max_rel_movae, rel_err(grads.mixture_logits(k), (up - down) / 2e-6));
  }

  out.pass = max_rel_movae < 1e-3;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "backward max rel %.2e (tol 1e-4), movae max rel %.2e (tol 1e-3)",
                max_rel_backward, max_rel_movae);
  out.detail = buf;
  return out;
}

Outcome criterion2_schedule() {
  Outcome out;
  diffusion::NoiseSchedule s;
  double max_identity = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = double(i) / 1000.0;
    const auto [m, sigma] = diffusion::schedule_moments(s, t);
    max_identity = std::max(max_identity, std::abs(m * m + sigma * sigma - 1.0));
  }
  // Quadrature oracle: composite Simpson over [0, 1].
  double integral = 0.0;
  const int panels = 4000;
  for (int i = 0; i < panels; ++i) {
    const double a = double(i) / panels, b = double(i + 1) / panels;
    integral += ((b - a) / 6.0) *
                (s.beta(a) + 4.0 * s.beta(0.5 * (a + b)) + s.beta(b));
  }
  const double m1 = diffusion::schedule_moments(s, 1.0).first;
  const double m1_err = std::abs(m1 - std::exp(-integral));

  out.pass = max_identity <= 1e-12 && m1_err <= 1e-10;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "identity max %.2e (tol 1e-12), m_1 vs quadrature %.2e (tol 1e-10)",
                max_identity, m1_err);
  out.detail = buf;
  return out;
}

Outcome criterion3_oracle_score() {
  Outcome out;
  const auto mix = generic_mixture();
  Rng rng(17);
  const double h = 1e-6;
  double max_rel = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = 0.9 * rng.normal_vector(mix.dim());
    const double t = rng.uniform(0.02, 0.95);
    const Vector score = mix.score(x, t);
    for (int d = 0; d < mix.dim(); ++d) {
      Vector xp = x, xm = x;
      xp(d) += h;
      xm(d) -= h;
      const double fd =
          (mix.log_density(xp, t) - mix.log_density(xm, t)) / (2 * h);
      max_rel = std::max(max_rel, std::abs(score(d) - fd) /
                                      std::max({1.0, std::abs(fd)}));
    }
  }
  out.pass = max_rel < 1e-6;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "200 points, max rel err %.2e (tol 1e-6)", max_rel);
  out.detail = buf;
  return out;
}

Outcome criterion4_oracle_lid() {
  Outcome out;
  const auto spec = strata::preset("affine_oracle");
  const diffusion::ScoreSource source(
      diffusion::GaussianStrataMixture::from_spec(spec));
  const auto ds = strata::sample_stratified(spec, 1000, 2024);

  lid::LidConfig cfg;
  cfg.t_start = 0.01;
  cfg.t_end = 0.02;
  cfg.n_scores = 100;
  cfg.rule = lid::Rule::Gap;
  cfg.alpha = 0.05;
  cfg.seed = 5;
  const IntVector dims = lid::estimate_dims(source, ds.points, cfg, kThreads);

  Eigen::Index regular = 0, correct = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (ds.points.row(i).norm() <= 0.2) continue;
    ++regular;
    if (dims(i) == ds.true_dims(i)) ++correct;
  }
  const double accuracy = double(correct) / double(regular);
  const auto report = lid::strata_report(dims, cfg.alpha, ds.true_dims);

  out.pass = accuracy >= 0.95 && report.strata_count == 2 &&
             report.kept_dims == std::vector<int>{1, 2};
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "regular-point accuracy %.4f (need 0.95), K_hat %d, kept {%s}",
                accuracy, report.strata_count,
                [&] {
                  std::string s;
                  for (int d : report.kept_dims)
                    s += (s.empty() ? "" : ",") + std::to_string(d);
                  return s;
                }()
                    .c_str());
  out.detail = buf;
  return out;
}

Outcome criterion5_spectral_gap() {
  Outcome out;
  const int D = 10;
  std::string detail;
  bool pass = true;
  for (int d : {1, 2, 4, 7}) {
    strata::StratifiedSpaceSpec spec;
    strata::AffineGaussian stratum;
    stratum.offset = Vector::Zero(D);
    stratum.basis = Matrix::Zero(D, d);
    for (int i = 0; i < d; ++i) stratum.basis(i, i) = 1.0;
    stratum.intrinsic_cov = Matrix::Identity(d, d);
    spec.strata = {{stratum, Vector()}};
    spec.weights = Vector::Ones(1);
    const diffusion::ScoreSource source(
        diffusion::GaussianStrataMixture::from_spec(spec));
    const auto ds = strata::sample_stratified(spec, 200, 99 + d);

    lid::LidConfig cfg;
    cfg.t_start = 1e-4;  // E[1/sigma^2] >> 100 E[1/sigma] here
    cfg.t_end = 2e-4;
    cfg.n_scores = 500;
    cfg.rule = lid::Rule::Gap;
    cfg.seed = 7;
    const IntVector dims = lid::estimate_dims(source, ds.points, cfg, kThreads);
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < dims.size(); ++i)
      if (dims(i) == d) ++hits;
    const double rate = double(hits) / double(dims.size());
    detail += "d=" + std::to_string(d) + ":" + std::to_string(rate).substr(0, 5) + " ";
    pass = pass && rate >= 0.99;
  }
  out.pass = pass;
  out.detail = detail + "(need 0.99 each)";
  return out;
}

Outcome criterion6_scaled_table1() {
  Outcome out;
  const auto result = scaled_table1(0.0, false, 61);
  out.pass = result.ddpm_accuracy >= 0.85;
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "sigma*=0 ratio-rule accuracy %.4f (need 0.85)", result.ddpm_accuracy);
  out.detail = buf;
  return out;
}

Outcome criterion7_noise_robustness() {
  Outcome out;
  const auto result = scaled_table1(0.05, true, 62);
  out.pass = result.ddpm_accuracy >= 0.80 && result.lb_accuracy < 0.10 &&
             result.lpca_accuracy < 0.10;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "sigma*=0.05: ddpm %.4f (need 0.80), LB %.4f, LPCA %.4f (both < 0.10)",
                result.ddpm_accuracy, result.lb_accuracy, result.lpca_accuracy);
  out.detail = buf;
  return out;
}

Outcome criterion8_baseline_sanity() {
  Outcome out;
  strata::StratifiedSpaceSpec circle_spec;
  strata::Circle circle;
  circle.center = Vector::Zero(3);
  circle.radius = 1.0;
  circle_spec.strata = {{circle, Vector()}};
  circle_spec.weights = Vector::Ones(1);
  const auto circle_ds = strata::sample_stratified(circle_spec, 2000, 3);
  const auto lb = baselines::levina_bickel(circle_ds.points, 20, kThreads);
  const auto lb_summary = baselines::summarize(lb.estimates);

  strata::StratifiedSpaceSpec plane_spec;
  strata::PlanePatch plane{1.5};
  plane_spec.strata = {{plane, Vector()}};
  plane_spec.weights = Vector::Ones(1);
  const auto plane_ds = strata::sample_stratified(plane_spec, 1200, 4);
  const auto lpca = baselines::local_pca(plane_ds.points, 20, 0.95, kThreads);
  Eigen::Index planar = 0;
  for (Eigen::Index i = 0; i < plane_ds.size(); ++i)
    if (lpca.dims(i) == 2) ++planar;
  const double plane_rate = double(planar) / double(plane_ds.size());

  out.pass = lb_summary.mean >= 0.9 && lb_summary.mean <= 1.2 && plane_rate == 1.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "LB circle mean %.4f (need [0.9, 1.2]), plane LPCA rate %.4f (need 1.0)",
                lb_summary.mean, plane_rate);
  out.detail = buf;
  return out;
}

Outcome criterion9_w1() {
  Outcome out;
  Rng rng(31);
  double max_gap = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(rng.normal());
      b.push_back(rng.normal());
    }
    // Brute-force assignment optimum.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) cost += std::abs(a[i] - b[perm[i]]);
      best = std::min(best, cost / double(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    max_gap = std::max(max_gap, std::abs(metrics::w1_1d(a, b) - best));
  }

  const Matrix x = rng.normal_matrix(8, 300).transpose();
  const double self = metrics::sliced_w1(x, x, 64, 3);

  out.pass = max_gap < 1e-9 && self == 0.0;
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "max |w1 - brute force| %.2e (tol 1e-9), sliced_w1(X,X) = %g",
                max_gap, self);
  out.detail = buf;
  return out;
}

Outcome criterion10_movae_routing() {
  Outcome out;
  const auto ds = strata::sample_stratified(strata::preset("circle_plane"), 3000, 71);

  movae::MoVaeTrainConfig cfg;
  cfg.expert_dims = {1, 2};
  cfg.latent_dim = 4;
  cfg.enc_hidden = {256, 256};
  cfg.dec_hidden = {256, 256};
  cfg.gate_hidden = {128};
  cfg.hyper.beta = 0.01;
  cfg.hyper.beta_end = 0.5;
  cfg.hyper.beta_g = 0.01;
  cfg.hyper.tau_start = 2.0;
  cfg.hyper.tau_end = 0.1;
  cfg.hyper.epochs_phase1 = 2000;
  cfg.hyper.epochs_phase2 = 2000;
  cfg.hyper.batch = 256;
  cfg.seed = 12;
  cfg.quiet = true;
  const auto result = movae::train_movae(ds.points, cfg);

  const auto acc = metrics::label_accuracy(result.routing, ds.labels);
  out.pass = acc.accuracy >= 0.90;
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "permutation-matched routing accuracy %.4f (need 0.90)", acc.accuracy);
  out.detail = buf;
  return out;
}

Outcome criterion11_reverse_stationarity() {
  Outcome out;
  const auto mix = diffusion::GaussianStrataMixture::point_mass(Vector::Zero(3), 1.0);
  const diffusion::ScoreSource source(mix);
  const auto samples = diffusion::sample_reverse(source, 20000, 500, 0.01, 50.0,
                                                 2025, kThreads);
  double worst_mean = 0.0, worst_var = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double mean = samples.samples.col(d).mean();
    const double var =
        (samples.samples.col(d).array() - mean).square().sum() / 20000.0;
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(var - 1.0));
  }
  const double mean_band = 6.0 / std::sqrt(20000.0);
  out.pass = worst_mean < mean_band && worst_var < 0.10 &&
             samples.n_truncated() == 0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "worst |mean| %.4f (band %.4f), worst |var-1| %.4f (band 0.10)",
                worst_mean, mean_band, worst_var);
  out.detail = buf;
  return out;
}

Outcome criterion12_figure5_crossover() {
  Outcome out;
  // Helix + Swiss roll embedded in R^15 with equal weights (the Figure-5
  // setup); one arm per noise level.
  const Eigen::Index n_train = 1000, n_gen = 5000;
  double w1_diffusion[2] = {0, 0}, w1_movae[2] = {0, 0};
  const double sigmas[2] = {0.0, 0.3};

  for (int arm = 0; arm < 2; ++arm) {
    auto spec = strata::preset("helix_swissroll_eq");
    spec.noise_sigma = sigmas[arm];
    const std::uint64_t seed = 301 + std::uint64_t(arm);
    const auto ds = strata::make_dataset(spec, n_train, seed);

    // Clean intrinsic reference through the same embedding.
    auto clean_spec = spec;
    clean_spec.noise_sigma = 0.0;
    const auto reference =
        strata::make_dataset(clean_spec, n_gen, derive_stream(seed, "ref", 0));

    // Diffusion arm.
    diffusion::TrainConfig ddpm_cfg;
    ddpm_cfg.steps = 12000;
    ddpm_cfg.batch = 128;
    ddpm_cfg.hidden_widths = {256, 256, 256};
    ddpm_cfg.time_embed_widths = {64, 64};
    ddpm_cfg.seed = derive_stream(seed, "ddpm", 0);
    const auto trained = diffusion::train_diffusion(ds.points, ddpm_cfg);
    const diffusion::ScoreSource source(trained.model);
    double trunc = 0.0;
    for (Eigen::Index i = 0; i < ds.size(); ++i)
      trunc = std::max(trunc, ds.points.row(i).cwiseAbs().maxCoeff());
    const auto generated = diffusion::sample_reverse(
        source, n_gen, 500, 0.01, 2.0 * trunc, derive_stream(seed, "gen", 0),
        kThreads);
    w1_diffusion[arm] = metrics::sliced_w1(generated.samples, reference.points,
                                           128, derive_stream(seed, "w1", 0),
                                           kThreads);

    // MoVAE arm.
    movae::MoVaeTrainConfig movae_cfg;
    movae_cfg.expert_dims = {1, 2};
    movae_cfg.latent_dim = 4;
    movae_cfg.enc_hidden = {256, 256};
    movae_cfg.dec_hidden = {256, 256};
    movae_cfg.gate_hidden = {128};
    movae_cfg.hyper.epochs_phase1 = 1500;
    movae_cfg.hyper.epochs_phase2 = 1500;
    movae_cfg.hyper.batch = 256;
    movae_cfg.seed = derive_stream(seed, "movae", 0);
    movae_cfg.quiet = true;
    const auto movae_result = movae::train_movae(ds.points, movae_cfg);
    const auto movae_samples = movae::movae_generate(
        movae_result.model, n_gen, derive_stream(seed, "movae_gen", 0));
    w1_movae[arm] = metrics::sliced_w1(movae_samples.samples, reference.points,
                                       128, derive_stream(seed, "w1", 0),
                                       kThreads);
  }

  const bool clean_order = w1_diffusion[0] < w1_movae[0];
  const bool noisy_order = w1_movae[1] < w1_diffusion[1];
  out.pass = clean_order && noisy_order;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "sigma*=0: diffusion %.4f vs movae %.4f (need <); "
                "sigma*=0.3: movae %.4f vs diffusion %.4f (need <)",
                w1_diffusion[0], w1_movae[0], w1_movae[1], w1_diffusion[1]);
  out.detail = buf;
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient suite vs central finite differences", criterion1_gradients},
      {2, "noise schedule identity and quadrature check", criterion2_schedule},
      {3, "analytic mixture score vs log-density finite differences",
       criterion3_oracle_score},
      {4, "oracle LID consistency on intersecting affine strata",
       criterion4_oracle_lid},
      {5, "spectral gap location for affine strata d in {1,2,4,7}",
       criterion5_spectral_gap},
      {6, "scaled circle+sphere table: DDPM ratio-rule accuracy",
       criterion6_scaled_table1},
      {7, "noise robustness: DDPM holds while classical baselines fail",
       criterion7_noise_robustness},
      {8, "baseline sanity on clean circle and plane", criterion8_baseline_sanity},
      {9, "exact 1-d Wasserstein and sliced self-distance", criterion9_w1},
      {10, "mixture-of-VAEs routing on circle+plane", criterion10_movae_routing},
      {11, "reverse sampler stationarity on the standard normal",
       criterion11_reverse_stationarity},
      {12, "sliced-W1 crossover between diffusion and MoVAE across noise",
       criterion12_figure5_crossover},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), criterion.id) == selected.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %d: %s — %s [%.1fs]\n",
                outcome.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
