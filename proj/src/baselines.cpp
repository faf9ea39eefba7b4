#include "stratlearn/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"
#include "stratlearn/parallel.hpp"

namespace stratlearn::baselines {

KnnIndex::KnnIndex(Matrix points) : points_(std::move(points)) {}

KnnIndex::Result KnnIndex::neighbors_of(Eigen::Index i, int k) const {
  const Eigen::Index n = points_.rows();
  if (k < 1 || k >= n) throw ConfigError("knn: need 1 <= k < n");
  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(std::size_t(n - 1));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    dist.emplace_back((points_.row(j) - points_.row(i)).norm(), j);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  Result out;
  out.indices.reserve(std::size_t(k));
  out.distances.reserve(std::size_t(k));
  for (int j = 0; j < k; ++j) {
    out.distances.push_back(dist[std::size_t(j)].first);
    out.indices.push_back(dist[std::size_t(j)].second);
  }
  return out;
}

LevinaBickelResult levina_bickel(const Eigen::Ref<const Matrix>& points, int k,
                                 int n_threads) {
  const Eigen::Index n = points.rows();
  if (k < 2 || k >= n) throw ConfigError("levina_bickel: need 2 <= k < n");
  const KnnIndex index{Matrix(points)};
  const int D = int(points.cols());

  LevinaBickelResult result;
  result.estimates = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  result.skipped.assign(std::size_t(n), 0);
  result.rounded = IntVector::Zero(n);

  parallel_for(n, n_threads, [&](std::int64_t i) {
    const auto nb = index.neighbors_of(Eigen::Index(i), k);
    const double t_k = nb.distances.back();
    double sum = 0.0;
    for (int j = 0; j < k - 1; ++j) {
      if (nb.distances[std::size_t(j)] <= 0.0) {
        result.skipped[std::size_t(i)] = 1;
        return;
      }
      sum += std::log(t_k / nb.distances[std::size_t(j)]);
    }
    const double mean_log = sum / double(k - 1);
    if (mean_log <= 0.0) {  // all k nearest at identical distance
      result.skipped[std::size_t(i)] = 1;
      return;
    }
    const double est = 1.0 / mean_log;
    result.estimates(Eigen::Index(i)) = est;
    const int r = int(std::floor(est + 0.5));
    result.rounded(Eigen::Index(i)) = std::clamp(r, 1, D);
  });
  return result;
}

LocalPcaResult local_pca(const Eigen::Ref<const Matrix>& points, int k,
                         double var_threshold, int n_threads) {
  const Eigen::Index n = points.rows();
  if (k < 2 || k >= n) throw ConfigError("local_pca: need 2 <= k < n");
  if (!(var_threshold > 0.0 && var_threshold <= 1.0))
    throw ConfigError("local_pca: var_threshold must lie in (0, 1]");
  const KnnIndex index{Matrix(points)};
  const int D = int(points.cols());

  LocalPcaResult result;
  result.dims = IntVector::Zero(n);
  result.degenerate.assign(std::size_t(n), 0);

  parallel_for(n, n_threads, [&](std::int64_t i) {
    const auto nb = index.neighbors_of(Eigen::Index(i), k);
    Matrix local(k, D);
    for (int j = 0; j < k; ++j)
      local.row(j) = points.row(nb.indices[std::size_t(j)]);
    const Vector mean = local.colwise().mean();
    local.rowwise() -= mean.transpose();
    const Matrix cov = local.transpose() * local / double(k);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    Vector eigenvalues = eig.eigenvalues().reverse();  // descending
    const double total = eigenvalues.sum();
    if (total <= 0.0) {
      result.degenerate[std::size_t(i)] = 1;
      result.dims(Eigen::Index(i)) = 0;
      return;
    }
    double acc = 0.0;
    for (int m = 0; m < D; ++m) {
      acc += eigenvalues(m);
      if (acc / total >= var_threshold) {
        result.dims(Eigen::Index(i)) = m + 1;
        return;
      }
    }
    result.dims(Eigen::Index(i)) = D;
  });
  return result;
}

namespace {

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return 0.0;
  const double h = (double(values.size()) - 1.0) * p;
  const std::size_t lo = std::size_t(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - double(lo)) * (values[lo + 1] - values[lo]);
}

}  // namespace

DimSummary summarize(const Vector& estimates) {
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < estimates.size(); ++i)
    if (std::isfinite(estimates(i))) vals.push_back(estimates(i));
  DimSummary s;
  if (vals.empty()) return s;
  double sum = 0.0;
  for (double v : vals) sum += v;
  s.mean = sum / double(vals.size());
  s.median = percentile(vals, 0.5);
  s.iqr_low = percentile(vals, 0.25);
  s.iqr_high = percentile(vals, 0.75);
  std::map<int, int> counts;
  for (double v : vals) counts[int(std::floor(v + 0.5))]++;
  int best = 0;
  for (const auto& [dim, count] : counts)
    if (count > best) {
      best = count;
      s.mode = dim;
    }
  return s;
}

std::string summary_to_json_string(const DimSummary& lb, const DimSummary& lpca,
                                   int k, double var_threshold) {
  nlohmann::json j;
  j["k"] = k;
  j["var_threshold"] = var_threshold;
  j["levina_bickel"] = {{"mean", lb.mean},
                        {"median", lb.median},
                        {"iqr", {lb.iqr_low, lb.iqr_high}},
                        {"mode", lb.mode}};
  j["local_pca"] = {{"mean", lpca.mean},
                    {"median", lpca.median},
                    {"iqr", {lpca.iqr_low, lpca.iqr_high}},
                    {"mode", lpca.mode}};
  return j.dump(2);
}

void save_baselines(const LevinaBickelResult& lb, const LocalPcaResult& lpca,
                    int k, double var_threshold, const std::string& csv_path,
                    const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw ConfigError("cannot open for writing: " + csv_path);
  csv << "index,lb_raw,lb_rounded,lpca\n";
  for (Eigen::Index i = 0; i < lb.estimates.size(); ++i)
    csv << i << "," << lb.estimates(i) << "," << lb.rounded(i) << ","
        << lpca.dims(i) << "\n";

  const DimSummary lb_summary = summarize(lb.estimates);
  const DimSummary lpca_summary = summarize(lpca.dims.cast<double>());
  std::ofstream json(json_path);
  if (!json) throw ConfigError("cannot open for writing: " + json_path);
  json << summary_to_json_string(lb_summary, lpca_summary, k, var_threshold)
       << "\n";
}

}  // namespace stratlearn::baselines
