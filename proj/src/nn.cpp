#include "stratlearn/nn.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "stratlearn/rng.hpp"

namespace stratlearn::nn {

namespace {

void check_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw ConfigError("layer_sizes must have at least input and output dims");
  for (int s : layer_sizes)
    if (s < 1) throw ConfigError("layer_sizes entries must be >= 1");
}

Matrix apply_activation(const Activation& act,
                        const Eigen::Ref<const Matrix>& z) {
  return z.unaryExpr([&act](double x) { return act.apply(x); });
}

Matrix activation_deriv(const Activation& act,
                        const Eigen::Ref<const Matrix>& z) {
  return z.unaryExpr([&act](double x) { return act.deriv(x); });
}

}  // namespace

MlpParams mlp_init(const std::vector<int>& layer_sizes, Activation activation,
                   std::uint64_t seed) {
  check_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  p.activation = activation;
  Rng rng(derive_stream(seed, "mlp_init", 0));
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int fan_in = layer_sizes[i];
    const int fan_out = layer_sizes[i + 1];
    const double bound = std::sqrt(6.0 / double(fan_in));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        w(r, c) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(fan_out));
  }
  return p;
}

MlpGrads zero_grads(const MlpParams& params) {
  MlpGrads g;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    g.weights.push_back(Matrix::Zero(params.weights[i].rows(),
                                     params.weights[i].cols()));
    g.biases.push_back(Vector::Zero(params.biases[i].size()));
  }
  return g;
}

void accumulate(MlpGrads& into, const MlpGrads& grads, double scale) {
  for (std::size_t i = 0; i < into.weights.size(); ++i) {
    into.weights[i] += scale * grads.weights[i];
    into.biases[i] += scale * grads.biases[i];
  }
}

Matrix mlp_forward(const MlpParams& params,
                   const Eigen::Ref<const Matrix>& inputs,
                   ForwardCache* cache) {
  if (inputs.rows() != params.input_dim())
    throw ShapeError("mlp_forward: input rows " + std::to_string(inputs.rows()) +
                     " != layer_sizes[0] " + std::to_string(params.input_dim()));
  const int L = params.num_layers();
  Matrix a = inputs;
  if (cache) {
    cache->input = inputs;
    cache->pre.clear();
    cache->post.clear();
  }
  for (int l = 0; l < L; ++l) {
    Matrix z = (params.weights[l] * a).colwise() + params.biases[l];
    if (l + 1 < L)
      a = apply_activation(params.activation, z);
    else
      a = z;
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(a);
    }
  }
  return a;
}

Matrix mlp_backward(const MlpParams& params, const ForwardCache& cache,
                    const Eigen::Ref<const Matrix>& output_grads,
                    MlpGrads& grads) {
  const int L = params.num_layers();
  if (int(cache.pre.size()) != L)
    throw ShapeError("mlp_backward: cache does not match params");
  if (output_grads.rows() != params.output_dim() ||
      output_grads.cols() != cache.input.cols())
    throw ShapeError("mlp_backward: output_grads shape mismatch");

  Matrix delta = output_grads;
  for (int l = L - 1; l >= 0; --l) {
    // Entering iteration l, delta is dL/d(post[l]); the last layer has no
    // activation so it is already dL/d(pre[L-1]).
    if (l + 1 < L)
      delta = delta.cwiseProduct(activation_deriv(params.activation, cache.pre[l]));
    const Matrix& a_prev = (l == 0) ? cache.input : cache.post[l - 1];
    grads.weights[l] += delta * a_prev.transpose();
    grads.biases[l] += delta.rowwise().sum();
    if (l > 0) delta = params.weights[l].transpose() * delta;
  }
  return params.weights[0].transpose() * delta;
}

AdamState adam_init(const MlpParams& params, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    s.m_w.push_back(Matrix::Zero(params.weights[i].rows(), params.weights[i].cols()));
    s.v_w.push_back(Matrix::Zero(params.weights[i].rows(), params.weights[i].cols()));
    s.m_b.push_back(Vector::Zero(params.biases[i].size()));
    s.v_b.push_back(Vector::Zero(params.biases[i].size()));
  }
  return s;
}

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite())
      throw NumericError("adam_step: non-finite gradient in layer " +
                         std::to_string(l));
  }
  state.step_count += 1;
  const auto& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(h.beta2, double(state.step_count));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    state.m_w[l] = h.beta1 * state.m_w[l] + (1.0 - h.beta1) * grads.weights[l];
    state.v_w[l] = h.beta2 * state.v_w[l] +
                   (1.0 - h.beta2) * grads.weights[l].array().square().matrix();
    params.weights[l].array() -=
        h.lr * (state.m_w[l].array() / bc1) /
        ((state.v_w[l].array() / bc2).sqrt() + h.eps);

    state.m_b[l] = h.beta1 * state.m_b[l] + (1.0 - h.beta1) * grads.biases[l];
    state.v_b[l] = h.beta2 * state.v_b[l] +
                   (1.0 - h.beta2) * grads.biases[l].array().square().matrix();
    params.biases[l].array() -=
        h.lr * (state.m_b[l].array() / bc1) /
        ((state.v_b[l].array() / bc2).sqrt() + h.eps);
  }
}

AdamVecState adam_vec_init(Eigen::Index n, AdamHyper hyper) {
  AdamVecState s;
  s.hyper = hyper;
  s.m = Vector::Zero(n);
  s.v = Vector::Zero(n);
  return s;
}

void adam_vec_step(Vector& params, const Vector& grad, AdamVecState& state) {
  if (!grad.allFinite()) throw NumericError("adam_vec_step: non-finite gradient");
  state.step_count += 1;
  const auto& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(h.beta2, double(state.step_count));
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.array().square().matrix();
  params.array() -= h.lr * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + h.eps);
}

Matrix decoder_jacobian(const MlpParams& params,
                        const Eigen::Ref<const Vector>& latent) {
  if (latent.size() != params.input_dim())
    throw ShapeError("decoder_jacobian: latent size mismatch");
  const int L = params.num_layers();
  Matrix jac = params.weights[0];
  Vector a = latent;
  for (int l = 0; l < L - 1; ++l) {
    Vector z = params.weights[l] * a + params.biases[l];
    Vector mask(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      mask(i) = params.activation.deriv(z(i));
    jac = mask.asDiagonal() * jac;
    jac = params.weights[l + 1] * jac;
    a = z.unaryExpr([&](double x) { return params.activation.apply(x); });
  }
  return jac;
}

std::string mlp_to_json_string(const MlpParams& params) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["layer_sizes"] = params.layer_sizes;
  switch (params.activation.kind) {
    case Activation::Kind::ReLU: j["activation"] = {{"kind", "relu"}}; break;
    case Activation::Kind::LeakyReLU:
      j["activation"] = {{"kind", "leaky_relu"}, {"slope", params.activation.slope}};
      break;
    case Activation::Kind::Identity: j["activation"] = {{"kind", "identity"}}; break;
  }
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c)
        row.push_back(params.weights[l](r, c));
      w.push_back(std::move(row));
    }
    weights.push_back(std::move(w));
    nlohmann::json b = nlohmann::json::array();
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      b.push_back(params.biases[l](i));
    biases.push_back(std::move(b));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

namespace {
MlpParams mlp_from_json(const nlohmann::json& j) {
  MlpParams p;
  p.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  check_layer_sizes(p.layer_sizes);
  const auto& act = j.at("activation");
  const std::string kind = act.at("kind").get<std::string>();
  if (kind == "relu") p.activation = Activation::relu();
  else if (kind == "leaky_relu")
    p.activation = Activation::leaky_relu(act.at("slope").get<double>());
  else if (kind == "identity") p.activation = Activation::identity();
  else throw ParseError("unknown activation kind: " + kind);
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const int rows = p.layer_sizes[l + 1], cols = p.layer_sizes[l];
    Matrix w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        w(r, c) = weights.at(l).at(r).at(c).get<double>();
    Vector b(rows);
    for (int r = 0; r < rows; ++r) b(r) = biases.at(l).at(r).get<double>();
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}
}  // namespace

MlpParams mlp_from_json_string(const std::string& text) {
  return mlp_from_json(nlohmann::json::parse(text));
}

void save_mlp(const MlpParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << mlp_to_json_string(params);
}

MlpParams load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return mlp_from_json_string(text);
}

}  // namespace stratlearn::nn
