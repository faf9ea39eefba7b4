#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>

#include "stratlearn/metrics.hpp"
#include "stratlearn/movae.hpp"
#include "stratlearn/rng.hpp"
#include "stratlearn/strata.hpp"
#include "test_util.hpp"

using namespace stratlearn;
using namespace stratlearn::movae;

namespace {

MoVaeModel tiny_model(int data_dim, int n_experts, int latent, int width,
                      std::uint64_t seed) {
  MoVaeModel model;
  model.latent_dim = latent;
  const auto act = nn::Activation::leaky_relu(0.2);
  for (int k = 0; k < n_experts; ++k) {
    MoVaeExpert e;
    e.encoder = nn::mlp_init({data_dim, width, 2 * latent}, act,
                             derive_stream(seed, "enc", std::uint64_t(k)));
    e.decoder = nn::mlp_init({latent, width, data_dim}, act,
                             derive_stream(seed, "dec", std::uint64_t(k)));
    e.target_dim = 1 + k % (data_dim - 1);
    model.experts.push_back(std::move(e));
  }
  model.gate = nn::mlp_init({data_dim, width, n_experts}, act,
                            derive_stream(seed, "gate", 0));
  Rng rng(derive_stream(seed, "pi", 0));
  model.mixture_logits = 0.3 * rng.normal_vector(n_experts);
  return model;
}

}  // namespace

TEST_CASE("gate_posterior soft values") {
  MoVaeModel model = tiny_model(2, 2, 2, 4, 1);
  // Zero the gate so logits are exactly the biases we set.
  for (auto& w : model.gate.weights) w.setZero();
  model.gate.biases[0].setZero();
  model.gate.biases[1].setZero();

  Vector x = Vector::Zero(2);
  const Vector uniform = gate_posterior(model, x, 1.0, GateMode::Soft);
  CHECK(uniform(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(uniform(1) == doctest::Approx(0.5).epsilon(1e-12));

  model.gate.biases[1](0) = std::log(2.0);
  const Vector skewed = gate_posterior(model, x, 1.0, GateMode::Soft);
  CHECK(skewed(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(skewed(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gate_posterior gumbel low-temperature limit is one-hot") {
  MoVaeModel model = tiny_model(3, 3, 2, 4, 5);
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = rng.normal_vector(3);
    const Vector h = gate_posterior(model, x, 0.01, GateMode::GumbelSample,
                                    std::uint64_t(trial));
    CHECK(std::abs(h.sum() - 1.0) <= 1e-12);
    CHECK(h.minCoeff() >= 0.0);
    CHECK(h.maxCoeff() > 1.0 - 1e-6);
  }
}

TEST_CASE("projection_penalty closed-form cases") {
  Vector s1(5);
  s1 << 1, 1, 0, 0, 0;
  CHECK(projection_penalty(s1, 2, 5) == 0.0);

  Vector s2 = Vector::Zero(5);
  CHECK(projection_penalty(s2, 2, 5) == doctest::Approx(1.0));

  Vector s3(5);
  s3 << 1, 1, 1, 0, 0;
  CHECK(projection_penalty(s3, 2, 5) == doctest::Approx(1.0 / 3.0));

  // Short lists are zero-padded to the ambient dimension.
  Vector s4(2);
  s4 << 1, 1;
  CHECK(projection_penalty(s4, 2, 5) == 0.0);
}

TEST_CASE("penalty is zero only for an exact d-projection spectrum") {
  // Linear decoders with identity activation: J equals the weight product.
  const int D = 5, latent = 3, d = 2;
  MoVaeModel model;
  model.latent_dim = latent;
  MoVaeExpert e;
  e.encoder = nn::mlp_init({D, 2 * latent}, nn::Activation::identity(), 0);
  e.decoder = nn::mlp_init({latent, D}, nn::Activation::identity(), 0);
  e.decoder.weights[0].setZero();
  e.decoder.weights[0](0, 0) = 1.0;
  e.decoder.weights[0](1, 1) = 1.0;  // spectrum (1, 1, 0, ...)
  e.target_dim = d;
  model.experts.push_back(e);
  model.gate = nn::mlp_init({D, 1}, nn::Activation::identity(), 0);
  model.mixture_logits = Vector::Zero(1);

  const Matrix jac = nn::decoder_jacobian(model.experts[0].decoder, Vector::Zero(latent));
  Eigen::JacobiSVD<Matrix> svd(jac);
  CHECK(projection_penalty(svd.singularValues(), d, D) < 1e-24);

  model.experts[0].decoder.weights[0](2, 2) = 0.4;  // extra nonzero direction
  const Matrix jac2 = nn::decoder_jacobian(model.experts[0].decoder, Vector::Zero(latent));
  Eigen::JacobiSVD<Matrix> svd2(jac2);
  CHECK(projection_penalty(svd2.singularValues(), d, D) > 0.01);
}

TEST_CASE("movae_loss reduces to zero for a perfect identity autoencoder") {
  const int D = 2;
  MoVaeModel model;
  model.latent_dim = D;
  MoVaeExpert e;
  e.encoder = nn::mlp_init({D, 2 * D}, nn::Activation::identity(), 0);
  e.encoder.weights[0].setZero();
  e.encoder.weights[0](0, 0) = 1.0;
  e.encoder.weights[0](1, 1) = 1.0;    // mean head = x
  e.encoder.biases[0](2) = -60.0;      // log-variance ~ 0 variance
  e.encoder.biases[0](3) = -60.0;
  e.decoder = nn::mlp_init({D, D}, nn::Activation::identity(), 0);
  e.decoder.weights[0] = Matrix::Identity(D, D);
  e.target_dim = 1;
  model.experts.push_back(e);
  model.gate = nn::mlp_init({D, 1}, nn::Activation::identity(), 0);
  model.mixture_logits = Vector::Zero(1);

  Rng rng(3);
  const Matrix batch = rng.normal_matrix(D, 8);
  LossWeights weights;
  weights.beta = 0.0;
  weights.beta_g = 0.0;
  weights.gamma = 0.0;
  const auto loss = movae_loss(model, batch, weights, 1, nullptr);
  CHECK(loss.total < 1e-12);
}

TEST_CASE("latent KL closed form through the loss") {
  const int D = 4;
  MoVaeModel model;
  model.latent_dim = D;
  MoVaeExpert e;
  e.encoder = nn::mlp_init({D, 2 * D}, nn::Activation::identity(), 0);
  e.encoder.weights[0].setZero();  // mean and logvar are the biases
  e.decoder = nn::mlp_init({D, D}, nn::Activation::identity(), 0);
  e.target_dim = 1;
  model.experts.push_back(e);
  model.gate = nn::mlp_init({D, 1}, nn::Activation::identity(), 0);
  model.mixture_logits = Vector::Zero(1);

  LossWeights weights;
  weights.beta = 1.0;
  weights.beta_g = 0.0;
  weights.gamma = 0.0;
  const Matrix batch = Matrix::Zero(D, 1);

  // mu = 0, logvar = 0 -> KL = 0.
  auto loss = movae_loss(model, batch, weights, 1, nullptr);
  CHECK(loss.kl == doctest::Approx(0.0));

  // mu = (1,0,0,0), logvar = 0 -> KL = 0.5.
  model.experts[0].encoder.biases[0](0) = 1.0;
  loss = movae_loss(model, batch, weights, 1, nullptr);
  CHECK(loss.kl == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gate KL term is nonnegative and vanishes when h equals w") {
  auto model = tiny_model(3, 2, 2, 6, 9);
  Rng rng(11);
  const Matrix batch = rng.normal_matrix(3, 16);
  LossWeights weights;
  weights.beta = 0.0;
  weights.gamma = 0.0;
  weights.beta_g = 0.01;

  const auto loss = movae_loss(model, batch, weights, 2, nullptr);
  CHECK(loss.gate_kl >= -1e-15);  // beta_g * mean KL(h || w)

  // Uniform gate and uniform pi make the term vanish.
  for (auto& w : model.gate.weights) w.setZero();
  for (auto& b : model.gate.biases) b.setZero();
  model.mixture_logits.setZero();
  const auto loss0 = movae_loss(model, batch, weights, 2, nullptr);
  CHECK(std::abs(loss0.gate_kl) < 1e-14);
}

TEST_CASE("movae_loss gradients match finite differences") {
  const int D = 3, K = 2, latent = 2, width = 8;
  auto model = tiny_model(D, K, latent, width, 17);
  Rng rng(23);
  const Matrix batch = rng.normal_matrix(D, 5);
  const std::uint64_t noise_seed = 31;

  for (auto mode : {GateMode::Soft, GateMode::GumbelSample}) {
    LossWeights weights;
    weights.beta = 0.15;
    weights.beta_g = 0.05;
    weights.gamma = 0.4;
    weights.tau = 0.8;
    weights.mode = mode;

    MoVaeGradients grads = zero_gradients(model);
    movae_loss(model, batch, weights, noise_seed, &grads);
    const auto eval = [&] {
      return movae_loss(model, batch, weights, noise_seed, nullptr).total;
    };

    double max_rel = 0.0;
    const auto check_group = [&](nn::MlpParams& params, const nn::MlpGrads& g) {
      for (std::size_t i = 0; i < testutil::param_count(params); ++i) {
        const double fd = testutil::central_diff(params, i, eval, 1e-6);
        const double an = testutil::grad_at(g, i);
        if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
        max_rel = std::max(max_rel, testutil::rel_err(an, fd));
      }
    };
    for (int k = 0; k < K; ++k) {
      check_group(model.experts[std::size_t(k)].encoder, grads.encoders[std::size_t(k)]);
      check_group(model.experts[std::size_t(k)].decoder, grads.decoders[std::size_t(k)]);
    }
    check_group(model.gate, grads.gate);
    for (int k = 0; k < K; ++k) {
      const double saved = model.mixture_logits(k);
      model.mixture_logits(k) = saved + 1e-6;
      const double up = eval();
      model.mixture_logits(k) = saved - 1e-6;
      const double down = eval();
      model.mixture_logits(k) = saved;
      max_rel = std::max(
          max_rel, testutil::rel_err(grads.mixture_logits(k), (up - down) / 2e-6));
    }
    CHECK(max_rel < 1e-3);
  }
}

TEST_CASE("frozen-mode loss only trains the assigned expert") {
  const int D = 3;
  auto model = tiny_model(D, 2, 2, 6, 3);
  Rng rng(7);
  const Matrix batch = rng.normal_matrix(D, 4);
  IntVector assign(4);
  assign << 0, 0, 0, 0;  // everything to expert 0

  LossWeights weights;
  MoVaeGradients grads = zero_gradients(model);
  movae_loss_frozen(model, batch, assign, weights, 5, &grads);
  for (const auto& w : grads.encoders[1].weights)
    CHECK(w.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& w : grads.gate.weights)
    CHECK(w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.mixture_logits.cwiseAbs().maxCoeff() == 0.0);
  double enc0 = 0.0;
  for (const auto& w : grads.encoders[0].weights) enc0 += w.cwiseAbs().sum();
  CHECK(enc0 > 0.0);
}

TEST_CASE("train_movae determinism and phase-2 gate freeze") {
  const auto ds = strata::sample_stratified(strata::preset("circle_plane"), 200, 3);
  MoVaeTrainConfig cfg;
  cfg.expert_dims = {1, 2};
  cfg.latent_dim = 3;
  cfg.enc_hidden = {16};
  cfg.dec_hidden = {16};
  cfg.gate_hidden = {8};
  cfg.hyper.epochs_phase1 = 30;
  cfg.hyper.epochs_phase2 = 0;
  cfg.hyper.batch = 32;
  cfg.seed = 5;
  cfg.quiet = true;

  const auto phase1_only = train_movae(ds.points, cfg);
  cfg.hyper.epochs_phase2 = 25;
  const auto with_phase2 = train_movae(ds.points, cfg);
  const auto with_phase2_again = train_movae(ds.points, cfg);

  // Phase 2 must leave gate parameters and mixture logits bitwise unchanged.
  for (int l = 0; l < phase1_only.model.gate.num_layers(); ++l) {
    CHECK(with_phase2.model.gate.weights[std::size_t(l)] ==
          phase1_only.model.gate.weights[std::size_t(l)]);
    CHECK(with_phase2.model.gate.biases[std::size_t(l)] ==
          phase1_only.model.gate.biases[std::size_t(l)]);
  }
  CHECK(with_phase2.model.mixture_logits == phase1_only.model.mixture_logits);

  // Determinism end to end.
  CHECK(with_phase2.model.experts[0].encoder.weights[0] ==
        with_phase2_again.model.experts[0].encoder.weights[0]);
  CHECK(with_phase2.routing == with_phase2_again.routing);

  // Expert parameters did move in phase 2.
  CHECK(with_phase2.model.experts[0].decoder.weights[0] !=
        phase1_only.model.experts[0].decoder.weights[0]);
}

TEST_CASE("single-expert training is a plain VAE with all-ones routing") {
  Rng rng(5);
  const Matrix points = rng.normal_matrix(3, 150).transpose();
  MoVaeTrainConfig cfg;
  cfg.expert_dims = {2};
  cfg.latent_dim = 2;
  cfg.enc_hidden = {16};
  cfg.dec_hidden = {16};
  cfg.gate_hidden = {4};
  cfg.hyper.epochs_phase1 = 40;
  cfg.hyper.epochs_phase2 = 10;
  cfg.hyper.batch = 32;
  cfg.seed = 2;
  cfg.quiet = true;
  const auto result = train_movae(points, cfg);
  for (Eigen::Index i = 0; i < result.routing.size(); ++i)
    CHECK(result.routing(i) == 1);
  // Loss should drop over training.
  const double first = result.loss_trace.front();
  const double last = result.loss_trace.back();
  CHECK(last < first);
}

TEST_CASE("movae_generate basics") {
  auto model = tiny_model(3, 2, 2, 6, 41);

  SUBCASE("n = 0 gives empty output") {
    const auto out = movae_generate(model, 0, 1);
    CHECK(out.samples.rows() == 0);
  }
  SUBCASE("a dominant logit routes every sample to expert 1") {
    model.mixture_logits(0) = 60.0;
    model.mixture_logits(1) = 0.0;
    const auto out = movae_generate(model, 200, 2);
    for (Eigen::Index i = 0; i < 200; ++i) CHECK(out.labels(i) == 1);
  }
  SUBCASE("label frequencies follow softmax(pi) within 6 sigma") {
    model.mixture_logits(0) = std::log(2.0);
    model.mixture_logits(1) = 0.0;  // w = (2/3, 1/3)
    const Eigen::Index n = 50000;
    const auto out = movae_generate(model, n, 3);
    Eigen::Index ones = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (out.labels(i) == 1) ++ones;
    const double frac = double(ones) / double(n);
    const double band = 6.0 * std::sqrt(2.0 / 9.0 / double(n));
    CHECK(std::abs(frac - 2.0 / 3.0) < band);
  }
}

TEST_CASE("movae checkpoint round-trip") {
  const auto model = tiny_model(3, 2, 2, 6, 13);
  const std::string path =
      (std::filesystem::temp_directory_path() / "movae_ckpt.json").string();
  save_movae(model, path);
  const auto loaded = load_movae(path);
  CHECK(loaded.latent_dim == model.latent_dim);
  CHECK(loaded.mixture_logits == model.mixture_logits);
  CHECK(loaded.experts[0].encoder.weights[0] == model.experts[0].encoder.weights[0]);
  CHECK(loaded.experts[1].decoder.weights[1] == model.experts[1].decoder.weights[1]);
  CHECK(loaded.experts[0].target_dim == model.experts[0].target_dim);
}
