#include "stratlearn/diffusion.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "stratlearn/rng.hpp"

namespace stratlearn::diffusion {

void NoiseSchedule::validate() const {
  if (horizon <= 0.0) throw ConfigError("schedule horizon must be > 0");
  if (beta_min <= 0.0 || beta_max <= 0.0)
    throw ConfigError("beta must stay positive on [0, T]");
}

std::pair<double, double> schedule_moments(const NoiseSchedule& schedule,
                                           double t) {
  if (t < 0.0 || t > schedule.horizon)
    throw DomainError("t=" + std::to_string(t) + " outside [0, T]");
  const double m = std::exp(-schedule.int_beta(t));
  const double sigma2 = std::max(0.0, 1.0 - m * m);
  return {m, std::sqrt(sigma2)};
}

std::pair<Vector, Vector> perturb(const Eigen::Ref<const Vector>& x0, double t,
                                  const NoiseSchedule& schedule,
                                  std::uint64_t seed) {
  const auto [m, sigma] = schedule_moments(schedule, t);
  Rng rng(derive_stream(seed, "perturb", 0));
  const Vector eps = rng.normal_vector(x0.size());
  return {m * x0 + sigma * eps, eps};
}

void DiffusionModel::validate() const {
  if (eps_net.input_dim() != data_dim + time_embed.output_dim())
    throw ConfigError("eps_net input != data_dim + time embedding size");
  if (eps_net.output_dim() != data_dim)
    throw ConfigError("eps_net output != data_dim");
  if (time_embed.input_dim() != 1)
    throw ConfigError("time_embed input must be 1");
  schedule.validate();
}

Matrix DiffusionModel::eps_batch(const Eigen::Ref<const Matrix>& x,
                                 const Eigen::Ref<const Vector>& ts) const {
  if (x.rows() != data_dim) throw ShapeError("eps_batch: x rows != data_dim");
  if (x.cols() != ts.size()) throw ShapeError("eps_batch: ts size mismatch");
  const Matrix emb = nn::mlp_forward(time_embed, ts.transpose());
  Matrix joined(data_dim + emb.rows(), x.cols());
  joined.topRows(data_dim) = x;
  joined.bottomRows(emb.rows()) = emb;
  return nn::mlp_forward(eps_net, joined);
}

Matrix DiffusionModel::score_batch(const Eigen::Ref<const Matrix>& x,
                                   const Eigen::Ref<const Vector>& ts) const {
  Matrix eps = eps_batch(x, ts);
  for (Eigen::Index j = 0; j < eps.cols(); ++j) {
    const auto [m, sigma] = schedule_moments(schedule, ts(j));
    (void)m;
    eps.col(j) /= -sigma;
  }
  return eps;
}

GaussianStrataMixture GaussianStrataMixture::from_spec(
    const strata::StratifiedSpaceSpec& spec) {
  spec.validate();
  GaussianStrataMixture mix;
  mix.noise_sigma = spec.noise_sigma;
  const int D = spec.native_dim();
  for (std::size_t k = 0; k < spec.strata.size(); ++k) {
    const auto* ag = std::get_if<strata::AffineGaussian>(&spec.strata[k].kind);
    if (!ag)
      throw ConfigError("analytic oracle requires affine_gaussian strata");
    GaussianComponent comp;
    comp.weight = spec.weights(Eigen::Index(k));
    comp.mean = Vector::Zero(D);
    comp.mean.head(ag->offset.size()) = ag->offset;
    if (spec.strata[k].translation.size() > 0)
      comp.mean.head(spec.strata[k].translation.size()) +=
          spec.strata[k].translation;
    // Diagonalize the intrinsic covariance so the marginal covariance is
    // c I + m^2 U diag(s) U^T with orthonormal U.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(ag->intrinsic_cov);
    if (eig.info() != Eigen::Success)
      throw NumericError("intrinsic_cov eigendecomposition failed");
    Matrix basis = Matrix::Zero(D, ag->basis.cols());
    basis.topRows(ag->basis.rows()) = ag->basis;
    comp.basis = basis * eig.eigenvectors();
    comp.spectrum = eig.eigenvalues();
    if (comp.spectrum.size() > 0 && comp.spectrum.minCoeff() <= 0.0)
      throw ConfigError("intrinsic_cov must be positive definite");
    mix.components.push_back(std::move(comp));
  }
  return mix;
}

GaussianStrataMixture GaussianStrataMixture::point_mass(const Vector& mean,
                                                        double noise_sigma) {
  GaussianStrataMixture mix;
  mix.noise_sigma = noise_sigma;
  GaussianComponent comp;
  comp.weight = 1.0;
  comp.mean = mean;
  comp.basis = Matrix(mean.size(), 0);
  comp.spectrum = Vector(0);
  mix.components.push_back(std::move(comp));
  return mix;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct ComponentEval {
  double log_density;
  Vector score;
};

ComponentEval eval_component(const GaussianComponent& comp, double noise_sigma,
                             const Eigen::Ref<const Vector>& x, double m,
                             double sigma) {
  const double c = m * m * noise_sigma * noise_sigma + sigma * sigma;
  const Eigen::Index D = x.size();
  const Eigen::Index d = comp.spectrum.size();
  const Vector r = x - m * comp.mean;

  double log_det = double(D - d) * std::log(c);
  Vector proj;  // basis^T r
  Vector gamma(d);
  if (d > 0) {
    proj = comp.basis.transpose() * r;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double lam = c + m * m * comp.spectrum(i);
      log_det += std::log(lam);
      gamma(i) = m * m * comp.spectrum(i) / lam;
    }
  }
  double quad = r.squaredNorm();
  Vector correction = Vector::Zero(D);
  if (d > 0) {
    quad -= proj.dot(gamma.cwiseProduct(proj));
    correction = comp.basis * gamma.cwiseProduct(proj);
  }
  quad /= c;

  ComponentEval out;
  out.log_density = -0.5 * (double(D) * kLog2Pi + log_det + quad);
  out.score = -(r - correction) / c;
  return out;
}

}  // namespace

double GaussianStrataMixture::log_density(const Eigen::Ref<const Vector>& x,
                                          double t) const {
  if (t <= 0.0) throw DomainError("log_density requires t > 0");
  const auto [m, sigma] = schedule_moments(schedule, t);
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(components.size());
  for (std::size_t k = 0; k < components.size(); ++k) {
    logs[k] = std::log(components[k].weight) +
              eval_component(components[k], noise_sigma, x, m, sigma).log_density;
    max_log = std::max(max_log, logs[k]);
  }
  double sum = 0.0;
  for (double lg : logs) sum += std::exp(lg - max_log);
  return max_log + std::log(sum);
}

Vector GaussianStrataMixture::responsibilities(const Eigen::Ref<const Vector>& x,
                                               double t) const {
  if (t <= 0.0) throw DomainError("responsibilities require t > 0");
  const auto [m, sigma] = schedule_moments(schedule, t);
  const std::size_t K = components.size();
  Vector logs = Vector::Zero(Eigen::Index(K));
  for (std::size_t k = 0; k < K; ++k)
    logs(Eigen::Index(k)) =
        std::log(components[k].weight) +
        eval_component(components[k], noise_sigma, x, m, sigma).log_density;
  const double max_log = logs.maxCoeff();
  Vector r = (logs.array() - max_log).exp();
  return r / r.sum();
}

Vector GaussianStrataMixture::component_score(int k,
                                              const Eigen::Ref<const Vector>& x,
                                              double t) const {
  if (t <= 0.0) throw DomainError("score requires t > 0");
  const auto [m, sigma] = schedule_moments(schedule, t);
  return eval_component(components.at(std::size_t(k)), noise_sigma, x, m, sigma)
      .score;
}

Vector GaussianStrataMixture::score(const Eigen::Ref<const Vector>& x,
                                    double t) const {
  if (t <= 0.0) throw DomainError("score requires t > 0");
  const auto [m, sigma] = schedule_moments(schedule, t);
  const std::size_t K = components.size();
  Vector logs = Vector::Zero(Eigen::Index(K));
  Matrix scores = Matrix::Zero(x.size(), Eigen::Index(K));
  for (std::size_t k = 0; k < K; ++k) {
    const auto ev = eval_component(components[k], noise_sigma, x, m, sigma);
    logs(Eigen::Index(k)) = std::log(components[k].weight) + ev.log_density;
    scores.col(Eigen::Index(k)) = ev.score;
  }
  const double max_log = logs.maxCoeff();
  Vector resp = (logs.array() - max_log).exp();
  resp /= resp.sum();
  return scores * resp;
}

int ScoreSource::dim() const {
  if (const auto* m = std::get_if<DiffusionModel>(&source)) return m->data_dim;
  return std::get<GaussianStrataMixture>(source).dim();
}

const NoiseSchedule& ScoreSource::schedule() const {
  if (const auto* m = std::get_if<DiffusionModel>(&source)) return m->schedule;
  return std::get<GaussianStrataMixture>(source).schedule;
}

Vector ScoreSource::score(const Eigen::Ref<const Vector>& x, double t) const {
  if (t <= 0.0) throw DomainError("score requires t > 0");
  if (const auto* m = std::get_if<DiffusionModel>(&source)) {
    Vector ts(1);
    ts(0) = t;
    return m->score_batch(x, ts).col(0);
  }
  return std::get<GaussianStrataMixture>(source).score(x, t);
}

Matrix ScoreSource::score_batch(const Eigen::Ref<const Matrix>& x,
                                const Eigen::Ref<const Vector>& ts) const {
  if (ts.size() > 0 && ts.minCoeff() <= 0.0)
    throw DomainError("score requires t > 0");
  if (const auto* m = std::get_if<DiffusionModel>(&source))
    return m->score_batch(x, ts);
  const auto& mix = std::get<GaussianStrataMixture>(source);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out.col(j) = mix.score(x.col(j), ts(j));
  return out;
}

TrainResult train_diffusion(const Eigen::Ref<const Matrix>& points,
                            const TrainConfig& config) {
  if (points.rows() == 0) throw ConfigError("train_diffusion: empty dataset");
  config.schedule.validate();
  const int D = int(points.cols());
  const int B = config.batch;
  const int te_out = config.time_embed_widths.back();

  std::vector<int> eps_sizes;
  eps_sizes.push_back(D + te_out);
  for (int w : config.hidden_widths) eps_sizes.push_back(w);
  eps_sizes.push_back(D);
  std::vector<int> te_sizes;
  te_sizes.push_back(1);
  for (int w : config.time_embed_widths) te_sizes.push_back(w);

  DiffusionModel model;
  model.data_dim = D;
  model.schedule = config.schedule;
  model.eps_net = nn::mlp_init(eps_sizes, nn::Activation::relu(),
                               derive_stream(config.seed, "eps_net", 0));
  model.time_embed = nn::mlp_init(te_sizes, nn::Activation::relu(),
                                  derive_stream(config.seed, "time_embed", 0));
  model.validate();

  nn::AdamHyper hyper;
  hyper.lr = config.lr;
  hyper.beta2 = config.adam_beta2;
  nn::AdamState eps_opt = nn::adam_init(model.eps_net, hyper);
  nn::AdamState te_opt = nn::adam_init(model.time_embed, hyper);

  // Shadow copies for the evaluation weights (exponential moving average).
  DiffusionModel ema = model;
  const bool use_ema = config.ema_decay > 0.0;

  TrainResult result;
  result.loss_trace.reserve(std::size_t(config.steps));

  Matrix x0(D, B), xt(D, B), eps(D, B);
  Vector ts(B);
  for (int step = 0; step < config.steps; ++step) {
    // Linear warmup, then cosine decay from lr to lr_final.
    double lr_now;
    if (step < config.warmup_steps) {
      lr_now = config.lr * double(step + 1) / double(config.warmup_steps);
    } else {
      const double progress =
          config.steps > config.warmup_steps + 1
              ? double(step - config.warmup_steps) /
                    double(config.steps - 1 - config.warmup_steps)
              : 1.0;
      lr_now = config.lr_final +
               0.5 * (config.lr - config.lr_final) *
                   (1.0 + std::cos(3.14159265358979323846 * progress));
    }
    eps_opt.hyper.lr = lr_now;
    te_opt.hyper.lr = lr_now;
    Rng rng(derive_stream(config.seed, "train_step", std::uint64_t(step)));
    for (int b = 0; b < B; ++b) {
      const auto idx = rng.below(std::uint64_t(points.rows()));
      x0.col(b) = points.row(Eigen::Index(idx)).transpose();
      // Jittered-stratified times: each t is marginally Uniform(t_floor, T)
      // but the batch covers the interval evenly.
      const double u = (double(b) + rng.uniform()) / double(B);
      ts(b) = config.t_floor + (config.schedule.horizon - config.t_floor) * u;
      for (int i = 0; i < D; ++i) eps(i, b) = rng.normal();
      const auto [m, sigma] = schedule_moments(config.schedule, ts(b));
      xt.col(b) = m * x0.col(b) + sigma * eps.col(b);
    }

    nn::ForwardCache te_cache, eps_cache;
    const Matrix emb = nn::mlp_forward(model.time_embed, ts.transpose(), &te_cache);
    Matrix joined(D + te_out, B);
    joined.topRows(D) = xt;
    joined.bottomRows(te_out) = emb;
    const Matrix pred = nn::mlp_forward(model.eps_net, joined, &eps_cache);

    const Matrix diff = pred - eps;
    const double loss = diff.squaredNorm() / double(B);
    if (!std::isfinite(loss))
      throw NumericError("train_diffusion: non-finite loss at step " +
                         std::to_string(step));
    result.loss_trace.push_back(loss);

    nn::MlpGrads eps_grads = nn::zero_grads(model.eps_net);
    nn::MlpGrads te_grads = nn::zero_grads(model.time_embed);
    const Matrix input_grads =
        nn::mlp_backward(model.eps_net, eps_cache, (2.0 / double(B)) * diff,
                         eps_grads);
    nn::mlp_backward(model.time_embed, te_cache, input_grads.bottomRows(te_out),
                     te_grads);
    nn::adam_step(model.eps_net, eps_grads, eps_opt);
    nn::adam_step(model.time_embed, te_grads, te_opt);

    if (use_ema) {
      const double d = config.ema_decay;
      for (int l = 0; l < model.eps_net.num_layers(); ++l) {
        ema.eps_net.weights[std::size_t(l)] =
            d * ema.eps_net.weights[std::size_t(l)] +
            (1.0 - d) * model.eps_net.weights[std::size_t(l)];
        ema.eps_net.biases[std::size_t(l)] =
            d * ema.eps_net.biases[std::size_t(l)] +
            (1.0 - d) * model.eps_net.biases[std::size_t(l)];
      }
      for (int l = 0; l < model.time_embed.num_layers(); ++l) {
        ema.time_embed.weights[std::size_t(l)] =
            d * ema.time_embed.weights[std::size_t(l)] +
            (1.0 - d) * model.time_embed.weights[std::size_t(l)];
        ema.time_embed.biases[std::size_t(l)] =
            d * ema.time_embed.biases[std::size_t(l)] +
            (1.0 - d) * model.time_embed.biases[std::size_t(l)];
      }
    }
  }

  result.model = use_ema ? std::move(ema) : std::move(model);
  return result;
}

Eigen::Index ReverseSamples::n_truncated() const {
  Eigen::Index n = 0;
  for (auto f : truncated) n += f;
  return n;
}

namespace {

// Integrates chains [begin, end) with per-chain noise streams.
void integrate_chains(const ScoreSource& source, Eigen::Index begin,
                      Eigen::Index end, int steps, double tau,
                      std::uint64_t seed, Matrix& out) {
  const auto& schedule = source.schedule();
  const int D = source.dim();
  const Eigen::Index n = end - begin;
  if (n == 0) return;
  const double dt = (schedule.horizon - tau) / double(steps);

  std::vector<Rng> rngs;
  rngs.reserve(std::size_t(n));
  Matrix y(D, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    rngs.emplace_back(derive_stream(seed, "reverse_chain",
                                    std::uint64_t(begin + c)));
    for (int i = 0; i < D; ++i) y(i, c) = rngs.back().normal();
  }

  Vector ts(n);
  for (int step = 0; step < steps; ++step) {
    const double t_rev = double(step) * dt;
    const double t_fwd = schedule.horizon - t_rev;
    const double beta = schedule.beta(t_fwd);
    ts.setConstant(t_fwd);
    const Matrix s = source.score_batch(y, ts);
    const double diffusion = std::sqrt(2.0 * beta * dt);
    for (Eigen::Index c = 0; c < n; ++c)
      for (int i = 0; i < D; ++i)
        y(i, c) += (beta * y(i, c) + 2.0 * beta * s(i, c)) * dt +
                   diffusion * rngs[std::size_t(c)].normal();
    if (!y.allFinite())
      throw NumericError("sample_reverse: non-finite state at step " +
                         std::to_string(step) + "; consider raising tau");
  }
  out.middleRows(begin, n) = y.transpose();
}

}  // namespace

ReverseSamples sample_reverse(const ScoreSource& source, Eigen::Index n,
                              int steps, double tau, double trunc_L,
                              std::uint64_t seed, int n_threads) {
  const auto& schedule = source.schedule();
  if (steps < 1) throw ConfigError("sample_reverse: steps must be >= 1");
  if (!(tau > 0.0 && tau < schedule.horizon))
    throw ConfigError("sample_reverse: tau must lie in (0, T)");

  ReverseSamples result;
  result.samples = Matrix(n, source.dim());
  result.truncated.assign(std::size_t(n), 0);
  if (n == 0) return result;

  const int workers = std::max(1, std::min<int>(n_threads, int(n)));
  if (workers == 1) {
    integrate_chains(source, 0, n, steps, tau, seed, result.samples);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors{std::size_t(workers)};
    const Eigen::Index chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const Eigen::Index begin = Eigen::Index(w) * chunk;
      const Eigen::Index end = std::min<Eigen::Index>(begin + chunk, n);
      if (begin >= end) break;
      pool.emplace_back([&, w, begin, end] {
        try {
          integrate_chains(source, begin, end, steps, tau, seed,
                           result.samples);
        } catch (...) {
          errors[std::size_t(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (result.samples.row(i).cwiseAbs().maxCoeff() > trunc_L) {
      result.samples.row(i).setZero();
      result.truncated[std::size_t(i)] = 1;
    }
  }
  return result;
}

void save_diffusion(const DiffusionModel& model, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "diffusion";
  j["data_dim"] = model.data_dim;
  j["schedule"] = {{"beta_min", model.schedule.beta_min},
                   {"beta_max", model.schedule.beta_max},
                   {"T", model.schedule.horizon}};
  j["eps_net"] = nlohmann::json::parse(nn::mlp_to_json_string(model.eps_net));
  j["time_embed"] =
      nlohmann::json::parse(nn::mlp_to_json_string(model.time_embed));
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump();
}

DiffusionModel load_diffusion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  DiffusionModel model;
  model.data_dim = j.at("data_dim").get<int>();
  model.schedule.beta_min = j.at("schedule").at("beta_min").get<double>();
  model.schedule.beta_max = j.at("schedule").at("beta_max").get<double>();
  model.schedule.horizon = j.at("schedule").at("T").get<double>();
  model.eps_net = nn::mlp_from_json_string(j.at("eps_net").dump());
  model.time_embed = nn::mlp_from_json_string(j.at("time_embed").dump());
  model.validate();
  return model;
}

void save_loss_trace(const std::vector<double>& trace,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "step,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << "," << trace[i] << "\n";
}

}  // namespace stratlearn::diffusion
