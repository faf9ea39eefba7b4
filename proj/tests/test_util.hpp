#pragma once

#include <functional>

#include "stratlearn/nn.hpp"

namespace stratlearn::testutil {

// Flat parameter view over an MLP: weights first (column-major per layer),
// then biases, layer by layer.
inline std::size_t param_count(const nn::MlpParams& p) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l)
    n += std::size_t(p.weights[l].size() + p.biases[l].size());
  return n;
}

inline double& param_at(nn::MlpParams& p, std::size_t index) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    if (index < std::size_t(p.weights[l].size()))
      return p.weights[l].data()[index];
    index -= std::size_t(p.weights[l].size());
    if (index < std::size_t(p.biases[l].size()))
      return p.biases[l].data()[index];
    index -= std::size_t(p.biases[l].size());
  }
  throw std::out_of_range("param_at");
}

inline double grad_at(const nn::MlpGrads& g, std::size_t index) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    if (index < std::size_t(g.weights[l].size()))
      return g.weights[l].data()[index];
    index -= std::size_t(g.weights[l].size());
    if (index < std::size_t(g.biases[l].size()))
      return g.biases[l].data()[index];
    index -= std::size_t(g.biases[l].size());
  }
  throw std::out_of_range("grad_at");
}

// Central finite difference of a scalar function of the parameters.
inline double central_diff(nn::MlpParams& p, std::size_t index,
                           const std::function<double()>& eval,
                           double h = 1e-6) {
  double& x = param_at(p, index);
  const double saved = x;
  x = saved + h;
  const double up = eval();
  x = saved - h;
  const double down = eval();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace stratlearn::testutil
