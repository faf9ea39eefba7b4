#include "stratlearn/movae.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "stratlearn/rng.hpp"

namespace stratlearn::movae {

void MoVaeModel::validate() const {
  if (experts.empty()) throw ConfigError("movae: need at least one expert");
  if (latent_dim < 1) throw ConfigError("movae: latent_dim must be >= 1");
  const int D = data_dim();
  const int K = n_experts();
  for (const auto& e : experts) {
    if (e.encoder.input_dim() != D || e.decoder.output_dim() != D)
      throw ConfigError("movae: expert dims inconsistent with data dim");
    if (e.encoder.output_dim() != 2 * latent_dim)
      throw ConfigError("movae: encoder must output mean and log-variance");
    if (e.decoder.input_dim() != latent_dim)
      throw ConfigError("movae: decoder input must equal latent_dim");
    if (e.target_dim < 1 || e.target_dim >= D)
      throw ConfigError("movae: target_dim must lie in [1, D-1]");
  }
  if (gate.input_dim() != D || gate.output_dim() != K)
    throw ConfigError("movae: gate must map data dim to K logits");
  if (mixture_logits.size() != K)
    throw ConfigError("movae: mixture_logits size must equal K");
}

namespace {

Vector softmax(const Eigen::Ref<const Vector>& v) {
  const Vector shifted = v.array() - v.maxCoeff();
  Vector e = shifted.array().exp();
  return e / e.sum();
}

}  // namespace

Vector gate_posterior(const MoVaeModel& model,
                      const Eigen::Ref<const Vector>& x, double tau,
                      GateMode mode, std::uint64_t seed) {
  if (tau <= 0.0) throw ConfigError("gate_posterior: tau must be > 0");
  const Vector logits = nn::mlp_forward(model.gate, x);
  if (mode == GateMode::Soft) return softmax(logits);
  Rng rng(derive_stream(seed, "gate_gumbel", 0));
  Vector noisy(logits.size());
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    noisy(k) = (logits(k) + rng.gumbel()) / tau;
  return softmax(noisy);
}

double projection_penalty(const Eigen::Ref<const Vector>& singular_values,
                          int target_dim, int ambient_dim) {
  if (target_dim < 1 || target_dim >= ambient_dim)
    throw ConfigError("projection_penalty: need 1 <= d < D");
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < ambient_dim; ++i) {
    const double s = (i < singular_values.size()) ? singular_values(i) : 0.0;
    if (i < target_dim)
      head += (s - 1.0) * (s - 1.0);
    else
      tail += s * s;
  }
  return head / double(target_dim) + tail / double(ambient_dim - target_dim);
}

MoVaeGradients zero_gradients(const MoVaeModel& model) {
  MoVaeGradients g;
  for (const auto& e : model.experts) {
    g.encoders.push_back(nn::zero_grads(e.encoder));
    g.decoders.push_back(nn::zero_grads(e.decoder));
  }
  g.gate = nn::zero_grads(model.gate);
  g.mixture_logits = Vector::Zero(model.mixture_logits.size());
  return g;
}

namespace {

// Per-sample penalty at latent z, with masks read from the cached decoder
// pre-activations of column b. When grads != nullptr, accumulates
// weight * dP/dW into the decoder weight gradients (masks held constant, so
// biases and the encoder receive nothing).
double penalty_with_grad(const nn::MlpParams& decoder,
                         const nn::ForwardCache& cache, Eigen::Index b,
                         int target_dim, int ambient_dim, double weight,
                         nn::MlpGrads* grads) {
  const int L = decoder.num_layers();
  const int latent = decoder.input_dim();

  std::vector<Vector> masks{}; masks.resize(std::size_t(std::max(0, L - 1)));
  for (int l = 0; l + 1 < L; ++l) {
    masks[std::size_t(l)] = cache.pre[std::size_t(l)].col(b).unaryExpr(
        [&](double v) { return decoder.activation.deriv(v); });
  }

  // right_chain[l] maps latent -> input of layer l; J = W_{L-1} right_chain[L-1].
  std::vector<Matrix> right_chain{}; right_chain.resize(std::size_t(L));
  right_chain[0] = Matrix::Identity(latent, latent);
  for (int l = 0; l + 1 < L; ++l)
    right_chain[std::size_t(l + 1)] =
        masks[std::size_t(l)].asDiagonal() *
        (decoder.weights[std::size_t(l)] * right_chain[std::size_t(l)]);
  const Matrix jac = decoder.weights[std::size_t(L - 1)] * right_chain[std::size_t(L - 1)];

  Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector svals = svd.singularValues();
  const double value = projection_penalty(svals, target_dim, ambient_dim);
  if (!grads) return value;

  Vector coeff(svals.size());
  for (Eigen::Index i = 0; i < svals.size(); ++i) {
    if (i < target_dim)
      coeff(i) = 2.0 * (svals(i) - 1.0) / double(target_dim);
    else
      coeff(i) = 2.0 * svals(i) / double(ambient_dim - target_dim);
  }
  // dP/dJ via dsigma_i/dJ = u_i v_i^T.
  const Matrix dj = svd.matrixU() * coeff.asDiagonal() * svd.matrixV().transpose();

  // left_chain[l] maps output of layer l -> output; dP/dW_l = left^T dJ right^T.
  Matrix left = Matrix::Identity(ambient_dim, ambient_dim);
  for (int l = L - 1; l >= 0; --l) {
    grads->weights[std::size_t(l)] +=
        weight * (left.transpose() * dj * right_chain[std::size_t(l)].transpose());
    if (l > 0)
      left = (left * decoder.weights[std::size_t(l)]) *
             masks[std::size_t(l - 1)].asDiagonal();
  }
  return value;
}

struct LossTermCheck {
  const char* name;
  double value;
};

LossValue movae_loss_impl(const MoVaeModel& model,
                          const Eigen::Ref<const Matrix>& batch,
                          const LossWeights& weights, std::uint64_t seed,
                          MoVaeGradients* gradients,
                          const IntVector* frozen_assignments) {
  model.validate();
  const int D = model.data_dim();
  const int K = model.n_experts();
  const int L = model.latent_dim;
  const Eigen::Index B = batch.cols();
  if (batch.rows() != D) throw ShapeError("movae_loss: batch rows != data dim");
  if (B == 0) throw ConfigError("movae_loss: empty batch");
  if (frozen_assignments && frozen_assignments->size() != B)
    throw ShapeError("movae_loss: assignments size != batch size");
  const bool frozen = frozen_assignments != nullptr;
  const double sigma2 = weights.recon_sigma * weights.recon_sigma;

  // Noise draws are a fixed function of (seed, b, k), independent of the
  // parameters, so finite-difference probes see identical noise.
  Matrix gumbel(K, B);
  std::vector<Matrix> xi(std::size_t(K), Matrix(L, B));
  {
    Rng rng(derive_stream(seed, "movae_noise", 0));
    for (Eigen::Index b = 0; b < B; ++b) {
      for (int k = 0; k < K; ++k) gumbel(k, b) = rng.gumbel();
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < L; ++j) xi[std::size_t(k)](j, b) = rng.normal();
    }
  }

  nn::ForwardCache gate_cache;
  const Matrix logits = nn::mlp_forward(model.gate, batch, &gate_cache);
  Matrix hhat(K, B);
  if (frozen) {
    hhat.setZero();
    for (Eigen::Index b = 0; b < B; ++b) {
      const int a = (*frozen_assignments)(b);
      if (a < 0 || a >= K) throw ConfigError("movae_loss: assignment out of range");
      hhat(a, b) = 1.0;
    }
  } else if (weights.mode == GateMode::Soft) {
    for (Eigen::Index b = 0; b < B; ++b) hhat.col(b) = softmax(logits.col(b));
  } else {
    if (weights.tau <= 0.0) throw ConfigError("movae_loss: tau must be > 0");
    for (Eigen::Index b = 0; b < B; ++b)
      hhat.col(b) = softmax((logits.col(b) + gumbel.col(b)) / weights.tau);
  }
  const Vector w = softmax(model.mixture_logits);

  Matrix ell = Matrix::Zero(K, B);
  LossValue out;
  out.gate_mass = hhat.rowwise().mean();

  for (int k = 0; k < K; ++k) {
    const auto& expert = model.experts[std::size_t(k)];
    // Columns this expert actually contributes to.
    std::vector<Eigen::Index> active;
    for (Eigen::Index b = 0; b < B; ++b)
      if (hhat(k, b) != 0.0) active.push_back(b);
    if (active.empty()) continue;
    const Eigen::Index Ba = Eigen::Index(active.size());

    Matrix xk(D, Ba), xik(L, Ba);
    for (Eigen::Index j = 0; j < Ba; ++j) {
      xk.col(j) = batch.col(active[std::size_t(j)]);
      xik.col(j) = xi[std::size_t(k)].col(active[std::size_t(j)]);
    }

    nn::ForwardCache enc_cache, dec_cache;
    const Matrix enc_out = nn::mlp_forward(expert.encoder, xk, &enc_cache);
    const Matrix mu = enc_out.topRows(L);
    const Matrix logvar = enc_out.bottomRows(L);
    const Matrix std_dev = (0.5 * logvar).array().exp();
    const Matrix z = mu + std_dev.cwiseProduct(xik);
    const Matrix xhat = nn::mlp_forward(expert.decoder, z, &dec_cache);
    const Matrix diff = xhat - xk;

    nn::MlpGrads* dec_grads =
        gradients ? &gradients->decoders[std::size_t(k)] : nullptr;

    for (Eigen::Index j = 0; j < Ba; ++j) {
      const Eigen::Index b = active[std::size_t(j)];
      const double h = hhat(k, b);
      const double recon = diff.col(j).squaredNorm() / sigma2;
      const double kl =
          0.5 * (mu.col(j).array().square() + logvar.col(j).array().exp() -
                 logvar.col(j).array() - 1.0)
                    .sum();
      const double pen = penalty_with_grad(
          expert.decoder, dec_cache, j, expert.target_dim, D,
          gradients ? weights.gamma * h / double(B) : 0.0, dec_grads);
      double gate_term = 0.0;
      if (!frozen)
        gate_term = -weights.beta_g * (std::log(w(k)) - std::log(hhat(k, b)));
      ell(k, b) = recon + weights.beta * kl + gate_term + weights.gamma * pen;

      out.recon += h * recon / double(B);
      out.kl += h * kl / double(B);
      out.gate_kl += h * gate_term / double(B);
      out.penalty += h * pen / double(B);
    }

    if (gradients) {
      // Reconstruction path through decoder and encoder.
      Matrix dxhat(D, Ba);
      for (Eigen::Index j = 0; j < Ba; ++j)
        dxhat.col(j) =
            (2.0 / sigma2) * (hhat(k, active[std::size_t(j)]) / double(B)) *
            diff.col(j);
      const Matrix dz =
          nn::mlp_backward(expert.decoder, dec_cache, dxhat, *dec_grads);

      Matrix denc(2 * L, Ba);
      for (Eigen::Index j = 0; j < Ba; ++j) {
        const double scale =
            hhat(k, active[std::size_t(j)]) / double(B) * weights.beta;
        denc.col(j).head(L) = dz.col(j) + scale * mu.col(j);
        denc.col(j).tail(L) =
            dz.col(j).cwiseProduct(0.5 * std_dev.col(j).cwiseProduct(xik.col(j))) +
            scale * 0.5 *
                (logvar.col(j).array().exp() - 1.0).matrix();
      }
      nn::mlp_backward(expert.encoder, enc_cache, denc,
                       gradients->encoders[std::size_t(k)]);
    }
  }

  double total = 0.0;
  for (Eigen::Index b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) total += hhat(k, b) * ell(k, b);
  out.total = total / double(B);

  const LossTermCheck checks[] = {{"reconstruction", out.recon},
                                  {"latent_kl", out.kl},
                                  {"gate_kl", out.gate_kl},
                                  {"projection_penalty", out.penalty},
                                  {"total", out.total}};
  for (const auto& c : checks)
    if (!std::isfinite(c.value))
      throw NumericError(std::string("movae_loss: non-finite term: ") + c.name);

  if (gradients && !frozen) {
    // Gate logits: softmax Jacobian applied to (ell_k + beta_g); the
    // constant shift cancels, leaving h_j (ell_j - sum_k h_k ell_k).
    const double temp_scale =
        (weights.mode == GateMode::GumbelSample) ? 1.0 / weights.tau : 1.0;
    Matrix dlogits(K, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const double expectation = hhat.col(b).dot(ell.col(b));
      for (int k = 0; k < K; ++k)
        dlogits(k, b) = temp_scale / double(B) * hhat(k, b) *
                        (ell(k, b) - expectation);
    }
    nn::mlp_backward(model.gate, gate_cache, dlogits, gradients->gate);

    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (Eigen::Index b = 0; b < B; ++b) acc += hhat(k, b) - w(k);
      gradients->mixture_logits(k) += -weights.beta_g * acc / double(B);
    }
  }
  return out;
}

}  // namespace

LossValue movae_loss(const MoVaeModel& model,
                     const Eigen::Ref<const Matrix>& batch,
                     const LossWeights& weights, std::uint64_t seed,
                     MoVaeGradients* gradients) {
  return movae_loss_impl(model, batch, weights, seed, gradients, nullptr);
}

LossValue movae_loss_frozen(const MoVaeModel& model,
                            const Eigen::Ref<const Matrix>& batch,
                            const IntVector& assignments,
                            const LossWeights& weights, std::uint64_t seed,
                            MoVaeGradients* gradients) {
  return movae_loss_impl(model, batch, weights, seed, gradients, &assignments);
}

namespace {

Matrix soft_gate_probs(const MoVaeModel& model,
                       const Eigen::Ref<const Matrix>& points) {
  const Matrix logits = nn::mlp_forward(model.gate, points.transpose());
  Matrix probs(points.rows(), model.n_experts());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    probs.row(i) = softmax(logits.col(i)).transpose();
  return probs;
}

IntVector argmax_rows(const Matrix& probs) {
  IntVector out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    out(i) = int(best);
  }
  return out;
}

}  // namespace

MoVaeTrainResult train_movae(const Eigen::Ref<const Matrix>& points,
                             const MoVaeTrainConfig& config) {
  if (points.rows() == 0) throw ConfigError("train_movae: empty dataset");
  if (config.expert_dims.empty())
    throw ConfigError("train_movae: expert_dims must name at least one expert");
  const int D = int(points.cols());
  const int K = int(config.expert_dims.size());
  const int L = config.latent_dim;
  const auto& hyper = config.hyper;
  if (!(hyper.tau_start >= hyper.tau_end && hyper.tau_end > 0.0))
    throw ConfigError("train_movae: need tau_start >= tau_end > 0");

  const nn::Activation act = nn::Activation::leaky_relu(0.2);
  MoVaeModel model;
  model.latent_dim = L;
  for (int k = 0; k < K; ++k) {
    MoVaeExpert expert;
    std::vector<int> enc_sizes{D};
    for (int wd : config.enc_hidden) enc_sizes.push_back(wd);
    enc_sizes.push_back(2 * L);
    std::vector<int> dec_sizes{L};
    for (int wd : config.dec_hidden) dec_sizes.push_back(wd);
    dec_sizes.push_back(D);
    expert.encoder = nn::mlp_init(enc_sizes, act,
                                  derive_stream(config.seed, "movae_enc", k));
    expert.decoder = nn::mlp_init(dec_sizes, act,
                                  derive_stream(config.seed, "movae_dec", k));
    expert.target_dim = config.expert_dims[std::size_t(k)];
    model.experts.push_back(std::move(expert));
  }
  std::vector<int> gate_sizes{D};
  for (int wd : config.gate_hidden) gate_sizes.push_back(wd);
  gate_sizes.push_back(K);
  model.gate = nn::mlp_init(gate_sizes, act,
                            derive_stream(config.seed, "movae_gate", 0));
  model.mixture_logits = Vector::Zero(K);
  model.validate();

  nn::AdamHyper opt_hyper;
  opt_hyper.lr = config.lr;
  std::vector<nn::AdamState> enc_opt, dec_opt;
  for (int k = 0; k < K; ++k) {
    enc_opt.push_back(nn::adam_init(model.experts[std::size_t(k)].encoder, opt_hyper));
    dec_opt.push_back(nn::adam_init(model.experts[std::size_t(k)].decoder, opt_hyper));
  }
  nn::AdamState gate_opt = nn::adam_init(model.gate, opt_hyper);
  nn::AdamVecState pi_opt = nn::adam_vec_init(K, opt_hyper);

  MoVaeTrainResult result;
  std::vector<int> collapse_streak(std::size_t(K), 0);

  const auto draw_batch = [&](std::uint64_t stream_seed, Matrix& xb,
                              std::vector<Eigen::Index>& idx) {
    Rng rng(stream_seed);
    for (int b = 0; b < hyper.batch; ++b) {
      idx[std::size_t(b)] = Eigen::Index(rng.below(std::uint64_t(points.rows())));
      xb.col(b) = points.row(idx[std::size_t(b)]).transpose();
    }
  };

  Matrix xb(D, hyper.batch);
  std::vector<Eigen::Index> idx(std::size_t(hyper.batch));

  // Phase 1: Gumbel routing, tau annealed geometrically, beta fixed.
  for (int e = 0; e < hyper.epochs_phase1; ++e) {
    double tau = hyper.tau_end;
    if (hyper.epochs_phase1 > 1)
      tau = hyper.tau_start *
            std::pow(hyper.tau_end / hyper.tau_start,
                     double(e) / double(hyper.epochs_phase1 - 1));
    draw_batch(derive_stream(config.seed, "p1_batch", std::uint64_t(e)), xb, idx);

    LossWeights weights;
    weights.beta = hyper.beta;
    weights.beta_g = hyper.beta_g;
    weights.gamma = hyper.gamma;
    weights.recon_sigma = hyper.recon_sigma;
    weights.tau = tau;
    weights.mode = GateMode::GumbelSample;

    MoVaeGradients grads = zero_gradients(model);
    const LossValue loss = movae_loss(
        model, xb, weights, derive_stream(config.seed, "p1_noise", std::uint64_t(e)),
        &grads);
    result.loss_trace.push_back(loss.total);

    for (int k = 0; k < K; ++k) {
      if (loss.gate_mass(k) < 0.01) {
        if (++collapse_streak[std::size_t(k)] == 50) {
          const std::string msg =
              "expert " + std::to_string(k + 1) +
              " received < 1% of batch mass for 50 consecutive epochs (epoch " +
              std::to_string(e) + ")";
          result.warnings.push_back(msg);
          if (!config.quiet) std::fprintf(stderr, "train_movae: %s\n", msg.c_str());
        }
      } else {
        collapse_streak[std::size_t(k)] = 0;
      }
    }

    for (int k = 0; k < K; ++k) {
      nn::adam_step(model.experts[std::size_t(k)].encoder,
                    grads.encoders[std::size_t(k)], enc_opt[std::size_t(k)]);
      nn::adam_step(model.experts[std::size_t(k)].decoder,
                    grads.decoders[std::size_t(k)], dec_opt[std::size_t(k)]);
    }
    nn::adam_step(model.gate, grads.gate, gate_opt);
    nn::adam_vec_step(model.mixture_logits, grads.mixture_logits, pi_opt);
  }

  // Phase 2: freeze routing to the soft-gate argmax; experts only.
  const IntVector frozen_all = argmax_rows(soft_gate_probs(model, points));
  IntVector assign(hyper.batch);
  for (int e = 0; e < hyper.epochs_phase2; ++e) {
    const double beta =
        hyper.beta + (hyper.beta_end - hyper.beta) * double(e + 1) /
                         double(std::max(1, hyper.epochs_phase2));
    draw_batch(derive_stream(config.seed, "p2_batch", std::uint64_t(e)), xb, idx);
    for (int b = 0; b < hyper.batch; ++b) assign(b) = frozen_all(idx[std::size_t(b)]);

    LossWeights weights;
    weights.beta = beta;
    weights.beta_g = hyper.beta_g;
    weights.gamma = hyper.gamma;
    weights.recon_sigma = hyper.recon_sigma;

    MoVaeGradients grads = zero_gradients(model);
    const LossValue loss = movae_loss_frozen(
        model, xb, assign, weights,
        derive_stream(config.seed, "p2_noise", std::uint64_t(e)), &grads);
    result.loss_trace.push_back(loss.total);

    for (int k = 0; k < K; ++k) {
      nn::adam_step(model.experts[std::size_t(k)].encoder,
                    grads.encoders[std::size_t(k)], enc_opt[std::size_t(k)]);
      nn::adam_step(model.experts[std::size_t(k)].decoder,
                    grads.decoders[std::size_t(k)], dec_opt[std::size_t(k)]);
    }
  }

  result.soft_probs = soft_gate_probs(model, points);
  const IntVector routing0 = argmax_rows(result.soft_probs);
  result.routing = routing0.array() + 1;
  result.model = std::move(model);
  return result;
}

GeneratedSamples movae_generate(const MoVaeModel& model, Eigen::Index n,
                                std::uint64_t seed) {
  model.validate();
  const int K = model.n_experts();
  const Vector w = softmax(model.mixture_logits);
  Vector cumulative(K);
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    acc += w(k);
    cumulative(k) = acc;
  }

  GeneratedSamples out;
  out.samples = Matrix(n, model.data_dim());
  out.labels = IntVector(n);
  if (n == 0) return out;

  Matrix latents(model.latent_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(derive_stream(seed, "movae_generate", std::uint64_t(i)));
    const double u = rng.uniform();
    int k = 0;
    while (k + 1 < K && u >= cumulative(k)) ++k;
    out.labels(i) = k + 1;
    latents.col(i) = rng.normal_vector(model.latent_dim);
  }
  // Decode per expert in one batched pass.
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i)
      if (out.labels(i) == k + 1) rows.push_back(i);
    if (rows.empty()) continue;
    Matrix z(model.latent_dim, Eigen::Index(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) z.col(Eigen::Index(j)) = latents.col(rows[j]);
    const Matrix decoded = nn::mlp_forward(model.experts[std::size_t(k)].decoder, z);
    for (std::size_t j = 0; j < rows.size(); ++j)
      out.samples.row(rows[j]) = decoded.col(Eigen::Index(j)).transpose();
  }
  return out;
}

void save_movae(const MoVaeModel& model, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "movae";
  j["latent_dim"] = model.latent_dim;
  nlohmann::json experts = nlohmann::json::array();
  for (const auto& e : model.experts) {
    nlohmann::json ej;
    ej["target_dim"] = e.target_dim;
    ej["encoder"] = nlohmann::json::parse(nn::mlp_to_json_string(e.encoder));
    ej["decoder"] = nlohmann::json::parse(nn::mlp_to_json_string(e.decoder));
    experts.push_back(std::move(ej));
  }
  j["experts"] = std::move(experts);
  j["gate"] = nlohmann::json::parse(nn::mlp_to_json_string(model.gate));
  nlohmann::json pi = nlohmann::json::array();
  for (Eigen::Index k = 0; k < model.mixture_logits.size(); ++k)
    pi.push_back(model.mixture_logits(k));
  j["mixture_logits"] = std::move(pi);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump();
}

MoVaeModel load_movae(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  MoVaeModel model;
  model.latent_dim = j.at("latent_dim").get<int>();
  for (const auto& ej : j.at("experts")) {
    MoVaeExpert e;
    e.target_dim = ej.at("target_dim").get<int>();
    e.encoder = nn::mlp_from_json_string(ej.at("encoder").dump());
    e.decoder = nn::mlp_from_json_string(ej.at("decoder").dump());
    model.experts.push_back(std::move(e));
  }
  model.gate = nn::mlp_from_json_string(j.at("gate").dump());
  const auto& pi = j.at("mixture_logits");
  model.mixture_logits = Vector(Eigen::Index(pi.size()));
  for (Eigen::Index k = 0; k < model.mixture_logits.size(); ++k)
    model.mixture_logits(k) = pi.at(std::size_t(k)).get<double>();
  model.validate();
  return model;
}

void save_routing(const IntVector& routing, const Matrix& soft_probs,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "index,expert";
  for (Eigen::Index k = 0; k < soft_probs.cols(); ++k) out << ",p" << (k + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < routing.size(); ++i) {
    out << i << "," << routing(i);
    for (Eigen::Index k = 0; k < soft_probs.cols(); ++k)
      out << "," << soft_probs(i, k);
    out << "\n";
  }
}

}  // namespace stratlearn::movae
