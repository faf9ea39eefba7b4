#pragma once

#include <cstdint>
#include <vector>

#include "stratlearn/common.hpp"

namespace stratlearn::metrics {

// Exact Wasserstein-1 between equal-size empirical measures on the line:
// sort both and average |a_(i) - b_(i)|.
double w1_1d(std::vector<double> a, std::vector<double> b);

// Average of w1_1d over projections onto i.i.d. uniform directions on the
// unit sphere. Unequal sample counts are handled by seeded subsampling of
// the larger set. Per-projection sub-streams plus pairwise summation keep
// the value independent of thread count.
double sliced_w1(const Eigen::Ref<const Matrix>& x,
                 const Eigen::Ref<const Matrix>& y, int n_projections,
                 std::uint64_t seed, int n_threads = 1);

struct LabelAccuracy {
  double accuracy = 0.0;
  std::vector<int> permutation;  // permutation[p-1] = label p maps to
};

// Best agreement over label permutations (exhaustive; K <= 8).
LabelAccuracy label_accuracy(const IntVector& predicted,
                             const IntVector& truth);

}  // namespace stratlearn::metrics
