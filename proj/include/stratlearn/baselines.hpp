#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stratlearn/common.hpp"

namespace stratlearn::baselines {

// Exact brute-force k-nearest-neighbor index (desk scale, n <= ~20000).
class KnnIndex {
 public:
  explicit KnnIndex(Matrix points);

  struct Result {
    std::vector<Eigen::Index> indices;
    std::vector<double> distances;  // nondecreasing
  };

  // k nearest neighbors of dataset member `i`, excluding `i` itself.
  Result neighbors_of(Eigen::Index i, int k) const;
  const Matrix& points() const { return points_; }

 private:
  Matrix points_;
};

struct LevinaBickelResult {
  Vector estimates;                    // real-valued; NaN where skipped
  std::vector<std::uint8_t> skipped;   // duplicate-distance flags
  IntVector rounded;                   // round-half-up, clamped to [1, D]
};

// MLE of local dimension from the k nearest neighbor distances:
// d(x) = [ (1/(k-1)) sum_{j<k} log(T_k / T_j) ]^{-1}.
LevinaBickelResult levina_bickel(const Eigen::Ref<const Matrix>& points, int k,
                                 int n_threads = 1);

struct LocalPcaResult {
  IntVector dims;                        // 0 with flag when degenerate
  std::vector<std::uint8_t> degenerate;  // zero total variance
};

// Smallest m whose leading eigenvalue mass reaches var_threshold, from the
// mean-centered covariance of each point's k neighbors.
LocalPcaResult local_pca(const Eigen::Ref<const Matrix>& points, int k,
                         double var_threshold, int n_threads = 1);

struct DimSummary {
  double mean = 0.0;
  double median = 0.0;
  double iqr_low = 0.0;   // linear-interpolation quartiles
  double iqr_high = 0.0;
  int mode = 0;
};

DimSummary summarize(const Vector& estimates);
std::string summary_to_json_string(const DimSummary& lb,
                                   const DimSummary& lpca, int k,
                                   double var_threshold);

// Per-point CSV (index, lb_raw, lb_rounded, lpca) and the summary JSON.
void save_baselines(const LevinaBickelResult& lb, const LocalPcaResult& lpca,
                    int k, double var_threshold, const std::string& csv_path,
                    const std::string& json_path);

}  // namespace stratlearn::baselines
