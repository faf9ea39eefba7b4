#include "stratlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stratlearn/parallel.hpp"
#include "stratlearn/rng.hpp"

namespace stratlearn::metrics {

double w1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size())
    throw ConfigError("w1_1d: multisets must have equal size");
  if (a.empty()) throw ConfigError("w1_1d: empty multisets");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / double(a.size());
}

namespace {

Matrix subsample_rows(const Eigen::Ref<const Matrix>& m, Eigen::Index target,
                      Rng& rng) {
  // Partial Fisher-Yates over row indices.
  std::vector<Eigen::Index> idx(std::size_t(m.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = 0; i < target; ++i) {
    const auto j = i + Eigen::Index(rng.below(std::uint64_t(m.rows() - i)));
    std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
  }
  Matrix out(target, m.cols());
  for (Eigen::Index i = 0; i < target; ++i) out.row(i) = m.row(idx[std::size_t(i)]);
  return out;
}

double pairwise_sum(const std::vector<double>& v, std::size_t begin,
                    std::size_t end) {
  if (end - begin <= 8) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(v, begin, mid) + pairwise_sum(v, mid, end);
}

}  // namespace

double sliced_w1(const Eigen::Ref<const Matrix>& x,
                 const Eigen::Ref<const Matrix>& y, int n_projections,
                 std::uint64_t seed, int n_threads) {
  if (x.cols() != y.cols()) throw ShapeError("sliced_w1: dimension mismatch");
  if (x.rows() == 0 || y.rows() == 0) throw ConfigError("sliced_w1: empty sample");
  if (n_projections < 1) throw ConfigError("sliced_w1: n_projections must be >= 1");

  Matrix xs = x, ys = y;
  if (x.rows() != y.rows()) {
    Rng rng(derive_stream(seed, "subsample", 0));
    const Eigen::Index target = std::min(x.rows(), y.rows());
    if (x.rows() > target) xs = subsample_rows(x, target, rng);
    if (y.rows() > target) ys = subsample_rows(y, target, rng);
  }
  const Eigen::Index d = x.cols();
  const Eigen::Index n = xs.rows();

  std::vector<double> values{}; values.resize(std::size_t(n_projections));
  parallel_for(n_projections, n_threads, [&](std::int64_t p) {
    Rng rng(derive_stream(seed, "projection", std::uint64_t(p)));
    Vector dir = rng.normal_vector(d);
    double norm = dir.norm();
    while (norm < 1e-12) {
      dir = rng.normal_vector(d);
      norm = dir.norm();
    }
    dir /= norm;
    const Vector px = xs * dir;
    const Vector py = ys * dir;
    std::vector<double> a(px.data(), px.data() + n);
    std::vector<double> b(py.data(), py.data() + n);
    values[std::size_t(p)] = w1_1d(std::move(a), std::move(b));
  });
  return pairwise_sum(values, 0, values.size()) / double(n_projections);
}

LabelAccuracy label_accuracy(const IntVector& predicted,
                             const IntVector& truth) {
  if (predicted.size() != truth.size())
    throw ShapeError("label_accuracy: size mismatch");
  if (predicted.size() == 0) throw ConfigError("label_accuracy: empty labels");
  int max_label = 0;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    if (predicted(i) < 1 || truth(i) < 1)
      throw ConfigError("label_accuracy: labels must be in [1..K]");
    max_label = std::max({max_label, predicted(i), truth(i)});
  }
  if (max_label > 8)
    throw ConfigError("label_accuracy: K > 8 is out of scope");

  std::vector<int> perm{}; perm.resize(std::size_t(max_label));
  std::iota(perm.begin(), perm.end(), 1);
  LabelAccuracy best;
  do {
    Eigen::Index agree = 0;
    for (Eigen::Index i = 0; i < predicted.size(); ++i)
      if (perm[std::size_t(predicted(i) - 1)] == truth(i)) ++agree;
    const double acc = double(agree) / double(predicted.size());
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best.permutation.empty()) {
    best.permutation.assign(std::size_t(max_label), 0);
    std::iota(best.permutation.begin(), best.permutation.end(), 1);
  }
  return best;
}

}  // namespace stratlearn::metrics
