#include "stratlearn/lid.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "stratlearn/parallel.hpp"
#include "stratlearn/rng.hpp"

namespace stratlearn::lid {

void LidConfig::validate(double horizon, int ambient_dim) const {
  if (!(t_start > 0.0 && t_start < t_end && t_end <= horizon))
    throw ConfigError("lid window must satisfy 0 < t_start < t_end <= T");
  if (n_scores < ambient_dim)
    throw ConfigError("lid N must be >= ambient dim");
  if (alpha < 0.0 || alpha >= 1.0)
    throw ConfigError("lid alpha must lie in [0, 1)");
  if (floor_eps <= 0.0) throw ConfigError("lid floor_eps must be > 0");
}

Matrix score_matrix(const diffusion::ScoreSource& source,
                    const Eigen::Ref<const Vector>& x0,
                    const LidConfig& config) {
  const int D = source.dim();
  if (x0.size() != D) throw ShapeError("score_matrix: x0 size != source dim");
  config.validate(source.schedule().horizon, D);

  Rng rng(derive_stream(config.seed, "score_matrix", 0));
  Matrix xt(D, config.n_scores);
  Vector ts(config.n_scores);
  for (int i = 0; i < config.n_scores; ++i) {
    const double t = rng.uniform(config.t_start, config.t_end);
    const auto [m, sigma] = schedule_moments(source.schedule(), t);
    ts(i) = t;
    for (int j = 0; j < D; ++j) xt(j, i) = m * x0(j) + sigma * rng.normal();
  }
  return source.score_batch(xt, ts);
}

Vector singular_values(const Eigen::Ref<const Matrix>& m) {
  if (!m.allFinite()) throw NumericError("singular_values: non-finite entries");
  if (m.cols() < m.rows())
    throw ShapeError("singular_values: expected a D x N matrix with N >= D");
  const Matrix gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw NumericError("singular_values: eigendecomposition failed");
  Vector vals = eig.eigenvalues();  // ascending
  Vector out(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    out(i) = std::sqrt(std::max(0.0, vals(vals.size() - 1 - i)));
  return out;
}

int lid_gap(const Eigen::Ref<const Vector>& svals, int ambient_dim) {
  if (svals.size() < ambient_dim || ambient_dim < 2)
    throw ShapeError("lid_gap: need D >= 2 singular values");
  int best_i = 1;
  double best = -1.0;
  for (int i = 1; i <= ambient_dim - 1; ++i) {
    const double gap = svals(i - 1) - svals(i);
    if (gap > best) {
      best = gap;
      best_i = i;
    }
  }
  return ambient_dim - best_i;
}

int lid_ratio(const Eigen::Ref<const Vector>& svals, int ambient_dim,
              double floor_eps) {
  if (svals.size() < ambient_dim || ambient_dim < 2)
    throw ShapeError("lid_ratio: need D >= 2 singular values");
  if (floor_eps <= 0.0) throw ConfigError("lid_ratio: floor_eps must be > 0");
  int best_i = 1;
  double best = -1.0;
  for (int i = 1; i <= ambient_dim - 1; ++i) {
    const double ratio = svals(i - 1) / std::max(svals(i), floor_eps);
    if (ratio > best) {
      best = ratio;
      best_i = i;
    }
  }
  return ambient_dim - best_i;
}

IntVector estimate_dims(const diffusion::ScoreSource& source,
                        const Eigen::Ref<const Matrix>& points,
                        const LidConfig& config, int n_threads) {
  const int D = source.dim();
  if (points.cols() != D)
    throw ShapeError("estimate_dims: points dim != source dim");
  config.validate(source.schedule().horizon, D);

  IntVector dims(points.rows());
  parallel_for(points.rows(), n_threads, [&](std::int64_t i) {
    LidConfig point_config = config;
    point_config.seed = derive_stream(config.seed, "lid_point", std::uint64_t(i));
    const Matrix s = score_matrix(source, points.row(i).transpose(), point_config);
    const Vector svals = singular_values(s);
    dims(Eigen::Index(i)) = (config.rule == Rule::Gap)
                                ? lid_gap(svals, D)
                                : lid_ratio(svals, D, config.floor_eps);
  });
  return dims;
}

LidReport strata_report(const IntVector& per_point_dim, double alpha,
                        const IntVector& true_dims) {
  LidReport report;
  report.per_point_dim = per_point_dim;
  const Eigen::Index n = per_point_dim.size();
  for (Eigen::Index i = 0; i < n; ++i) report.dim_counts[per_point_dim(i)]++;
  for (const auto& [dim, count] : report.dim_counts)
    if (n > 0 && double(count) / double(n) >= alpha)
      report.kept_dims.push_back(dim);
  report.strata_count = int(report.kept_dims.size());

  if (true_dims.size() == n && n > 0) {
    std::vector<int> trues;
    for (Eigen::Index i = 0; i < n; ++i) trues.push_back(true_dims(i));
    std::sort(trues.begin(), trues.end());
    trues.erase(std::unique(trues.begin(), trues.end()), trues.end());
    report.confusion_true_dims = trues;
    report.confusion = Eigen::MatrixXi::Zero(Eigen::Index(trues.size()),
                                             Eigen::Index(trues.size()) + 1);
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = std::lower_bound(trues.begin(), trues.end(), true_dims(i)) -
                       trues.begin();
      const auto found = std::find(trues.begin(), trues.end(), per_point_dim(i));
      const Eigen::Index col = (found == trues.end())
                                   ? Eigen::Index(trues.size())
                                   : (found - trues.begin());
      report.confusion(row, col)++;
      if (per_point_dim(i) == true_dims(i)) ++correct;
    }
    report.accuracy = double(correct) / double(n);
  }
  return report;
}

std::string report_to_json_string(const LidReport& report,
                                  const LidConfig& config) {
  nlohmann::json j;
  j["config"] = {{"t_start", config.t_start},
                 {"t_end", config.t_end},
                 {"n_scores", config.n_scores},
                 {"rule", config.rule == Rule::Gap ? "gap" : "ratio"},
                 {"floor_eps", config.floor_eps},
                 {"alpha", config.alpha},
                 {"seed", config.seed}};
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [dim, count] : report.dim_counts)
    counts[std::to_string(dim)] = count;
  j["dim_counts"] = counts;
  j["kept_dims"] = report.kept_dims;
  j["K_hat"] = report.strata_count;
  if (report.accuracy >= 0.0) {
    j["accuracy"] = report.accuracy;
    nlohmann::json confusion;
    confusion["true_dims"] = report.confusion_true_dims;
    std::vector<std::string> cols;
    for (int d : report.confusion_true_dims) cols.push_back(std::to_string(d));
    cols.push_back("other");
    confusion["predicted"] = cols;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
        row.push_back(report.confusion(r, c));
      rows.push_back(std::move(row));
    }
    confusion["counts"] = std::move(rows);
    j["confusion"] = std::move(confusion);
  }
  return j.dump(2);
}

void save_report(const LidReport& report, const LidConfig& config,
                 const std::string& json_path, const std::string& csv_path,
                 const IntVector& true_dims) {
  {
    std::ofstream out(json_path);
    if (!out) throw ConfigError("cannot open for writing: " + json_path);
    out << report_to_json_string(report, config) << "\n";
  }
  std::ofstream csv(csv_path);
  if (!csv) throw ConfigError("cannot open for writing: " + csv_path);
  csv << "index,dim,true_dim\n";
  for (Eigen::Index i = 0; i < report.per_point_dim.size(); ++i) {
    const int truth = (true_dims.size() == report.per_point_dim.size())
                          ? true_dims(i)
                          : -1;
    csv << i << "," << report.per_point_dim(i) << "," << truth << "\n";
  }
}

}  // namespace stratlearn::lid
