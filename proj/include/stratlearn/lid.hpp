#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stratlearn/common.hpp"
#include "stratlearn/diffusion.hpp"

namespace stratlearn::lid {

// Local intrinsic dimension estimation from sampled score vectors: perturb
// a data point over a small time window, collect N score evaluations, and
// read the dimension off the singular-value spectrum.

enum class Rule { Gap, Ratio };

struct LidConfig {
  double t_start = 0.03;
  double t_end = 0.031;
  int n_scores = 500;  // N; must be >= ambient D
  Rule rule = Rule::Ratio;
  double floor_eps = 1e-6;
  double alpha = 0.01;  // mass threshold
  std::uint64_t seed = 0;

  void validate(double horizon, int ambient_dim) const;
};

// Columns are score(x_t^{(i)}, t_i) with t_i ~ Uniform(t_start, t_end) and
// x_t^{(i)} ~ N(m_t x0, (1 - m_t^2) I). Deterministic given config.seed.
Matrix score_matrix(const diffusion::ScoreSource& source,
                    const Eigen::Ref<const Vector>& x0,
                    const LidConfig& config);

// Descending singular values via the eigendecomposition of the D x D Gram
// matrix S S^T (square roots of clamped-nonnegative eigenvalues).
Vector singular_values(const Eigen::Ref<const Matrix>& m);

// D - argmax_i (lambda_i - lambda_{i+1}); ties break to the smallest index.
int lid_gap(const Eigen::Ref<const Vector>& svals, int ambient_dim);

// D - argmax_i lambda_i / max(lambda_{i+1}, floor_eps); smallest-index ties.
int lid_ratio(const Eigen::Ref<const Vector>& svals, int ambient_dim,
              double floor_eps);

// Per-point dimension estimates. Point i uses the sub-stream derived from
// (config.seed, i), so results are stable under any thread count.
IntVector estimate_dims(const diffusion::ScoreSource& source,
                        const Eigen::Ref<const Matrix>& points,
                        const LidConfig& config, int n_threads = 1);

struct LidReport {
  IntVector per_point_dim;
  std::map<int, Eigen::Index> dim_counts;
  std::vector<int> kept_dims;  // counts / n >= alpha
  int strata_count = 0;        // K_hat
  double accuracy = -1.0;      // -1 when no ground truth
  // Confusion over the distinct true dims; the extra last column counts
  // predictions outside that set ("Other").
  std::vector<int> confusion_true_dims;
  Eigen::MatrixXi confusion;
};

// Histogram, alpha-threshold, K_hat; confusion and accuracy when truth is
// nonempty.
LidReport strata_report(const IntVector& per_point_dim, double alpha,
                        const IntVector& true_dims = IntVector());

std::string report_to_json_string(const LidReport& report,
                                  const LidConfig& config);
void save_report(const LidReport& report, const LidConfig& config,
                 const std::string& json_path, const std::string& csv_path,
                 const IntVector& true_dims = IntVector());

}  // namespace stratlearn::lid
