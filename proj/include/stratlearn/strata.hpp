#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stratlearn/common.hpp"

namespace stratlearn::strata {

// Closed-form stratum kinds. Each samples points in its native ambient
// space; the enclosing StratifiedSpaceSpec pads them to a common native
// dimension before translation.

struct Circle {  // radius r in the plane spanned by axes (axis_a, axis_b)
  Vector center;  // native-dim
  double radius = 1.0;
  int axis_a = 0, axis_b = 1;
};

struct Sphere {  // uniform on S^dim in R^{dim+1}
  Vector center;
  double radius = 1.0;
  int dim = 2;
};

struct Torus {  // ((R + r cos a) cos b, (R + r cos a) sin b, r sin a)
  double big_radius = 2.0;
  double small_radius = 0.5;
};

struct PlanePatch {  // uniform on [-extent, extent]^2 x {0}
  double extent = 1.5;
};

struct Helix {  // (radius cos t, radius sin t, pitch t), t uniform on range
  double radius = 1.0;
  double pitch = 0.1;
  double t_min = 0.0, t_max = 4.0 * 3.14159265358979323846;
};

struct SwissRoll {  // (s t cos t, s h, s t sin t); t, h uniform on ranges
  double t_min, t_max;
  double h_min, h_max;
  double scale = 0.2;
};

struct AffineGaussian {  // offset + basis z, z ~ N(0, intrinsic_cov)
  Vector offset;        // native-dim
  Matrix basis;         // native_dim x d, orthonormal columns
  Matrix intrinsic_cov; // d x d SPD
};

using StratumKind = std::variant<Circle, Sphere, Torus, PlanePatch, Helix,
                                 SwissRoll, AffineGaussian>;

struct StratumSpec {
  StratumKind kind;
  Vector translation;  // native-dim; zero-length means none

  int intrinsic_dim() const;
  int native_dim() const;  // smallest ambient dim the kind needs
};

struct StratifiedSpaceSpec {
  std::vector<StratumSpec> strata;
  Vector weights;          // positive, sum to 1
  double noise_sigma = 0.0;
  int ambient_dim = 0;     // target dim for embed; 0 = stay native
  std::uint64_t embed_seed = 0;
  std::string name;        // preset name when applicable

  int native_dim() const;  // max over strata
  void validate() const;   // throws ConfigError
};

struct Dataset {
  Matrix points;        // n x D, rows are points
  IntVector labels;     // 1..K before noise; empty if unknown
  IntVector true_dims;  // per point; empty if unknown
  std::optional<StratifiedSpaceSpec> spec;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  bool has_labels() const { return labels.size() == points.rows(); }
};

// Draw stratum ~ Categorical(weights), sample the stratum's distribution
// (uniform in its natural parameterization; exact surface measure for
// circle/sphere), apply translation. Points are native-dim and noiseless;
// labels and true dims are recorded. Deterministic given seed.
Dataset sample_stratified(const StratifiedSpaceSpec& spec, Eigen::Index n,
                          std::uint64_t seed);

// Adds i.i.d. N(0, sigma^2 I) per row; sigma = 0 returns the input bitwise.
Matrix add_noise(const Eigen::Ref<const Matrix>& points, double sigma,
                 std::uint64_t seed);

// Zero-pad rows to ambient_dim, then apply a fixed random orthogonal matrix
// (QR of a Gaussian matrix, R-diagonal sign-corrected). An isometry,
// deterministic given seed.
Matrix embed(const Eigen::Ref<const Matrix>& points, int ambient_dim,
             std::uint64_t seed);

// sample -> embed (if spec.ambient_dim > native) -> noise, with sub-streams
// derived from seed.
Dataset make_dataset(const StratifiedSpaceSpec& spec, Eigen::Index n,
                     std::uint64_t seed);

// Preset registry: circle_sphere, four_manifolds, circle_plane,
// helix_swissroll, helix_swissroll_eq, affine_oracle.
StratifiedSpaceSpec preset(const std::string& name);
std::vector<std::string> preset_names();

// Residual of the stratum's defining equations at a native-space point
// (pre-translation coordinates are recovered internally). Zero on-manifold.
double stratum_residual(const StratumSpec& stratum,
                        const Eigen::Ref<const Vector>& point);

// CSV I/O: comma-separated decimals, no header by default.
Matrix read_csv_matrix(const std::string& path, bool skip_header = false);
void write_csv_matrix(const std::string& path,
                      const Eigen::Ref<const Matrix>& m,
                      const std::string& comment = "");
Dataset ingest_csv(const std::string& path, bool skip_header = false);

// Dataset bundle directory: points.csv, labels.csv (when known), meta.json.
void save_bundle(const Dataset& ds, const std::string& dir);
Dataset load_bundle(const std::string& dir);

}  // namespace stratlearn::strata
