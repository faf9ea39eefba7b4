#include "stratlearn/strata.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "stratlearn/rng.hpp"
#include "stratlearn/serialize.hpp"

namespace stratlearn::strata {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

int StratumSpec::intrinsic_dim() const {
  return std::visit(
      [](const auto& k) -> int {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) return 1;
        else if constexpr (std::is_same_v<T, Sphere>) return k.dim;
        else if constexpr (std::is_same_v<T, Torus>) return 2;
        else if constexpr (std::is_same_v<T, PlanePatch>) return 2;
        else if constexpr (std::is_same_v<T, Helix>) return 1;
        else if constexpr (std::is_same_v<T, SwissRoll>) return 2;
        else return int(k.basis.cols());
      },
      kind);
}

int StratumSpec::native_dim() const {
  int d = std::visit(
      [](const auto& k) -> int {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) return int(k.center.size());
        else if constexpr (std::is_same_v<T, Sphere>) return int(k.center.size());
        else if constexpr (std::is_same_v<T, AffineGaussian>) return int(k.basis.rows());
        else return 3;
      },
      kind);
  return std::max<int>(d, int(translation.size()));
}

int StratifiedSpaceSpec::native_dim() const {
  int d = 0;
  for (const auto& s : strata) d = std::max(d, s.native_dim());
  return d;
}

void StratifiedSpaceSpec::validate() const {
  if (strata.empty()) throw ConfigError("spec has no strata");
  if (weights.size() != Eigen::Index(strata.size()))
    throw ConfigError("weights count != strata count");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights(i) > 0.0)) throw ConfigError("all weights must be > 0");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw ConfigError("weights must sum to 1");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (ambient_dim != 0 && ambient_dim < native_dim())
    throw ConfigError("ambient_dim smaller than native dim");
  for (const auto& s : strata) {
    if (const auto* ag = std::get_if<AffineGaussian>(&s.kind)) {
      const Matrix gram =
          ag->basis.transpose() * ag->basis -
          Matrix::Identity(ag->basis.cols(), ag->basis.cols());
      if (gram.cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("affine_gaussian basis columns must be orthonormal");
    }
    if (const auto* sp = std::get_if<Sphere>(&s.kind)) {
      if (sp->center.size() != sp->dim + 1)
        throw ConfigError("sphere center must live in R^{dim+1}");
    }
  }
}

namespace {

// Sample one point from the stratum in its native coordinates.
Vector sample_kind(const StratumKind& kind, Rng& rng) {
  return std::visit(
      [&rng](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) {
          Vector p = k.center;
          const double theta = rng.uniform(0.0, kTwoPi);
          p(k.axis_a) += k.radius * std::cos(theta);
          p(k.axis_b) += k.radius * std::sin(theta);
          return p;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          Vector g = rng.normal_vector(k.dim + 1);
          double norm = g.norm();
          while (norm < 1e-12) {  // essentially impossible, but exact
            g = rng.normal_vector(k.dim + 1);
            norm = g.norm();
          }
          return k.center + (k.radius / norm) * g;
        } else if constexpr (std::is_same_v<T, Torus>) {
          const double a = rng.uniform(0.0, kTwoPi);
          const double b = rng.uniform(0.0, kTwoPi);
          const double ring = k.big_radius + k.small_radius * std::cos(a);
          Vector p(3);
          p << ring * std::cos(b), ring * std::sin(b),
              k.small_radius * std::sin(a);
          return p;
        } else if constexpr (std::is_same_v<T, PlanePatch>) {
          Vector p(3);
          p << rng.uniform(-k.extent, k.extent),
              rng.uniform(-k.extent, k.extent), 0.0;
          return p;
        } else if constexpr (std::is_same_v<T, Helix>) {
          const double t = rng.uniform(k.t_min, k.t_max);
          Vector p(3);
          p << k.radius * std::cos(t), k.radius * std::sin(t), k.pitch * t;
          return p;
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          const double t = rng.uniform(k.t_min, k.t_max);
          const double h = rng.uniform(k.h_min, k.h_max);
          Vector p(3);
          p << k.scale * t * std::cos(t), k.scale * h,
              k.scale * t * std::sin(t);
          return p;
        } else {  // AffineGaussian
          const Eigen::LLT<Matrix> llt(k.intrinsic_cov);
          if (llt.info() != Eigen::Success)
            throw ConfigError("affine_gaussian intrinsic_cov is not SPD");
          const Vector z = llt.matrixL() * rng.normal_vector(k.basis.cols());
          return k.offset + k.basis * z;
        }
      },
      kind);
}

Vector pad_to(const Vector& v, int dim) {
  Vector out = Vector::Zero(dim);
  out.head(v.size()) = v;
  return out;
}

}  // namespace

Dataset sample_stratified(const StratifiedSpaceSpec& spec, Eigen::Index n,
                          std::uint64_t seed) {
  spec.validate();
  if (n < 0) throw ConfigError("n must be >= 0");
  const int D = spec.native_dim();
  const int K = int(spec.strata.size());
  Vector cumulative(K);
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    acc += spec.weights(k);
    cumulative(k) = acc;
  }

  Dataset ds;
  ds.points = Matrix(n, D);
  ds.labels = IntVector(n);
  ds.true_dims = IntVector(n);
  ds.spec = spec;
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(derive_stream(seed, "sample_stratified", std::uint64_t(i)));
    const double u = rng.uniform();
    int k = 0;
    while (k + 1 < K && u >= cumulative(k)) ++k;
    const auto& stratum = spec.strata[std::size_t(k)];
    Vector p = pad_to(sample_kind(stratum.kind, rng), D);
    if (stratum.translation.size() > 0)
      p += pad_to(stratum.translation, D);
    ds.points.row(i) = p.transpose();
    ds.labels(i) = k + 1;
    ds.true_dims(i) = stratum.intrinsic_dim();
  }
  return ds;
}

Matrix add_noise(const Eigen::Ref<const Matrix>& points, double sigma,
                 std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  if (sigma == 0.0) return points;
  Matrix out = points;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Rng rng(derive_stream(seed, "add_noise", std::uint64_t(i)));
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) += sigma * rng.normal();
  }
  return out;
}

Matrix embed(const Eigen::Ref<const Matrix>& points, int ambient_dim,
             std::uint64_t seed) {
  const int d_native = int(points.cols());
  if (ambient_dim < d_native)
    throw ConfigError("embed: ambient_dim " + std::to_string(ambient_dim) +
                      " < native dim " + std::to_string(d_native));
  Rng rng(derive_stream(seed, "embed", 0));
  const Matrix g = rng.normal_matrix(ambient_dim, ambient_dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < ambient_dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);

  Matrix padded = Matrix::Zero(points.rows(), ambient_dim);
  padded.leftCols(d_native) = points;
  return padded * q.transpose();
}

Dataset make_dataset(const StratifiedSpaceSpec& spec, Eigen::Index n,
                     std::uint64_t seed) {
  Dataset ds = sample_stratified(spec, n, derive_stream(seed, "stage", 0));
  if (spec.ambient_dim > 0)
    ds.points = embed(ds.points, spec.ambient_dim, spec.embed_seed);
  if (spec.noise_sigma > 0.0)
    ds.points = add_noise(ds.points, spec.noise_sigma,
                          derive_stream(seed, "stage", 1));
  return ds;
}

StratifiedSpaceSpec preset(const std::string& name) {
  StratifiedSpaceSpec spec;
  spec.name = name;
  if (name == "circle_sphere") {
    Circle circle;
    circle.center = Vector::Zero(3);
    circle.center(0) = 0.5;
    circle.radius = 1.2;
    Sphere sphere;
    sphere.center = Vector::Zero(3);
    sphere.radius = 1.0;
    sphere.dim = 2;
    spec.strata = {{circle, Vector()}, {sphere, Vector()}};
    spec.weights = Vector(2);
    spec.weights << 0.4, 0.6;
    spec.ambient_dim = 50;
  } else if (name == "four_manifolds") {
    Helix helix{1.0, 0.1, 0.0, 4.0 * kPi};
    Torus torus{2.0, 0.5};
    Sphere s4;
    s4.center = Vector::Zero(5);
    s4.radius = 1.0;
    s4.dim = 4;
    Sphere s7;
    s7.center = Vector::Zero(8);
    s7.radius = 1.0;
    s7.dim = 7;
    // Translations keep the minimum inter-stratum distance >= 2.
    Vector t_torus = Vector::Zero(3), t_s4 = Vector::Zero(5),
           t_s7 = Vector::Zero(8);
    t_torus(0) = 8.0;
    t_s4(0) = -8.0;
    t_s7(0) = 16.0;
    spec.strata = {{helix, Vector()},
                   {torus, t_torus},
                   {s4, t_s4},
                   {s7, t_s7}};
    spec.weights = Vector(4);
    spec.weights << 0.15, 0.2, 0.25, 0.4;
    spec.ambient_dim = 50;
  } else if (name == "circle_plane") {
    Circle circle;
    circle.center = Vector::Zero(3);
    circle.radius = 1.0;
    circle.axis_a = 0;
    circle.axis_b = 2;
    PlanePatch plane{1.5};
    spec.strata = {{circle, Vector()}, {plane, Vector()}};
    spec.weights = Vector(2);
    spec.weights << 0.5, 0.5;
    spec.ambient_dim = 0;
  } else if (name == "helix_swissroll" || name == "helix_swissroll_eq") {
    Helix helix{1.0, 0.5, 0.0, 4.0 * kPi};
    Vector t_helix(3);
    t_helix << -2.5, 0.0, -kPi;
    SwissRoll roll{1.5 * kPi, 4.5 * kPi, -2.5, 2.5, 0.2};
    Vector t_roll(3);
    t_roll << 2.5, 0.0, 0.0;
    spec.strata = {{helix, t_helix}, {roll, t_roll}};
    spec.weights = Vector(2);
    if (name == "helix_swissroll") {
      spec.weights << 1.0 / 3.0, 2.0 / 3.0;
      spec.ambient_dim = 0;
    } else {
      spec.weights << 0.5, 0.5;
      spec.ambient_dim = 15;
    }
  } else if (name == "affine_oracle") {
    // Two affine Gaussian strata of dims 1 and 2 meeting at the origin.
    const int D = 10;
    AffineGaussian line;
    line.offset = Vector::Zero(D);
    line.basis = Matrix::Zero(D, 1);
    line.basis(0, 0) = 1.0;
    line.intrinsic_cov = Matrix::Identity(1, 1);
    AffineGaussian plane;
    plane.offset = Vector::Zero(D);
    plane.basis = Matrix::Zero(D, 2);
    plane.basis(1, 0) = 1.0;
    plane.basis(2, 1) = 1.0;
    plane.intrinsic_cov = Matrix::Identity(2, 2);
    spec.strata = {{line, Vector()}, {plane, Vector()}};
    spec.weights = Vector(2);
    spec.weights << 0.5, 0.5;
    spec.ambient_dim = 0;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  spec.validate();
  return spec;
}

std::vector<std::string> preset_names() {
  return {"circle_sphere", "four_manifolds",  "circle_plane",
          "helix_swissroll", "helix_swissroll_eq", "affine_oracle"};
}

double stratum_residual(const StratumSpec& stratum,
                        const Eigen::Ref<const Vector>& point) {
  Vector q = point;
  if (stratum.translation.size() > 0)
    q.head(stratum.translation.size()) -= stratum.translation;
  const int nd = std::visit(
      [](const auto& k) -> int {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) return int(k.center.size());
        else if constexpr (std::is_same_v<T, Sphere>) return int(k.center.size());
        else if constexpr (std::is_same_v<T, AffineGaussian>) return int(k.basis.rows());
        else return 3;
      },
      stratum.kind);
  double tail = 0.0;  // padding coordinates must vanish
  if (q.size() > nd) tail = q.tail(q.size() - nd).cwiseAbs().maxCoeff();
  const Vector v = q.head(nd);

  const double res = std::visit(
      [&v](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) {
          const Vector d = v - k.center;
          const double in_plane =
              std::hypot(d(k.axis_a), d(k.axis_b)) - k.radius;
          double off_plane = 0.0;
          for (Eigen::Index i = 0; i < d.size(); ++i)
            if (i != k.axis_a && i != k.axis_b)
              off_plane = std::max(off_plane, std::abs(d(i)));
          return std::max(std::abs(in_plane), off_plane);
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return std::abs((v - k.center).norm() - k.radius);
        } else if constexpr (std::is_same_v<T, Torus>) {
          const double ring = std::hypot(v(0), v(1)) - k.big_radius;
          return std::abs(std::hypot(ring, v(2)) - k.small_radius);
        } else if constexpr (std::is_same_v<T, PlanePatch>) {
          const double overshoot =
              std::max({0.0, std::abs(v(0)) - k.extent,
                        std::abs(v(1)) - k.extent});
          return std::max(std::abs(v(2)), overshoot);
        } else if constexpr (std::is_same_v<T, Helix>) {
          const double t = v(2) / k.pitch;
          return std::hypot(v(0) - k.radius * std::cos(t),
                            v(1) - k.radius * std::sin(t));
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          const double t = std::hypot(v(0), v(2)) / k.scale;
          return std::hypot(v(0) - k.scale * t * std::cos(t),
                            v(2) - k.scale * t * std::sin(t));
        } else {  // AffineGaussian: distance to the affine subspace
          const Vector d = v - k.offset;
          return (d - k.basis * (k.basis.transpose() * d)).norm();
        }
      },
      stratum.kind);
  return std::max(res, tail);
}

// --- CSV and bundle I/O ---

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    if (line.empty() && in.peek() == EOF) break;
    if (!line.empty() && line[0] == '#') continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && *p == ' ') ++p;
      double value = 0.0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc())
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": non-numeric cell");
      row.push_back(value);
      p = next;
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (*p != ',')
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected ','");
      ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": ragged row (expected " +
                       std::to_string(rows.front().size()) + " cells, got " +
                       std::to_string(row.size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[std::size_t(i)][std::size_t(j)];
  return m;
}

void write_csv_matrix(const std::string& path,
                      const Eigen::Ref<const Matrix>& m,
                      const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

Dataset ingest_csv(const std::string& path, bool skip_header) {
  Dataset ds;
  ds.points = read_csv_matrix(path, skip_header);
  return ds;
}

void save_bundle(const Dataset& ds, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_csv_matrix(dir + "/points.csv", ds.points);
  if (ds.has_labels()) {
    Matrix lab(ds.labels.size(), 2);
    for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
      lab(i, 0) = ds.labels(i);
      lab(i, 1) = ds.true_dims(i);
    }
    write_csv_matrix(dir + "/labels.csv", lab);
  }
  nlohmann::json meta;
  meta["n"] = ds.points.rows();
  meta["dim"] = ds.points.cols();
  if (ds.spec) meta["spec"] = spec_to_json(*ds.spec);
  std::ofstream out(dir + "/meta.json");
  if (!out) throw ConfigError("cannot write " + dir + "/meta.json");
  out << meta.dump(2) << "\n";
}

Dataset load_bundle(const std::string& dir) {
  Dataset ds;
  ds.points = read_csv_matrix(dir + "/points.csv");
  const std::string labels_path = dir + "/labels.csv";
  if (std::filesystem::exists(labels_path)) {
    const Matrix lab = read_csv_matrix(labels_path);
    if (lab.rows() != ds.points.rows())
      throw ParseError(dir + ": labels.csv row count mismatch");
    ds.labels = lab.col(0).cast<int>();
    ds.true_dims = lab.col(1).cast<int>();
  }
  const std::string meta_path = dir + "/meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    nlohmann::json meta = nlohmann::json::parse(in);
    if (meta.contains("spec")) ds.spec = spec_from_json(meta["spec"]);
  }
  return ds;
}

// --- spec JSON ---

namespace {

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const nlohmann::json& a) {
  Vector v(Eigen::Index(a.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = a.at(std::size_t(i)).get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(Eigen::Index(rows.size()), Eigen::Index(rows.at(0).size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows.at(std::size_t(i)).at(std::size_t(j)).get<double>();
  return m;
}

nlohmann::json kind_to_json(const StratumKind& kind) {
  nlohmann::json j;
  std::visit(
      [&j](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) {
          j["kind"] = "circle";
          j["center"] = vector_to_json(k.center);
          j["radius"] = k.radius;
          j["axis_a"] = k.axis_a;
          j["axis_b"] = k.axis_b;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          j["kind"] = "sphere";
          j["center"] = vector_to_json(k.center);
          j["radius"] = k.radius;
          j["dim"] = k.dim;
        } else if constexpr (std::is_same_v<T, Torus>) {
          j["kind"] = "torus";
          j["big_radius"] = k.big_radius;
          j["small_radius"] = k.small_radius;
        } else if constexpr (std::is_same_v<T, PlanePatch>) {
          j["kind"] = "plane_patch";
          j["extent"] = k.extent;
        } else if constexpr (std::is_same_v<T, Helix>) {
          j["kind"] = "helix";
          j["radius"] = k.radius;
          j["pitch"] = k.pitch;
          j["t_min"] = k.t_min;
          j["t_max"] = k.t_max;
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          j["kind"] = "swiss_roll";
          j["t_min"] = k.t_min;
          j["t_max"] = k.t_max;
          j["h_min"] = k.h_min;
          j["h_max"] = k.h_max;
          j["scale"] = k.scale;
        } else {
          j["kind"] = "affine_gaussian";
          j["offset"] = vector_to_json(k.offset);
          j["basis"] = matrix_to_json(k.basis);
          j["intrinsic_cov"] = matrix_to_json(k.intrinsic_cov);
        }
      },
      kind);
  return j;
}

StratumKind kind_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "circle") {
    Circle k;
    k.center = vector_from_json(j.at("center"));
    k.radius = j.at("radius").get<double>();
    k.axis_a = j.value("axis_a", 0);
    k.axis_b = j.value("axis_b", 1);
    return k;
  }
  if (kind == "sphere") {
    Sphere k;
    k.center = vector_from_json(j.at("center"));
    k.radius = j.at("radius").get<double>();
    k.dim = j.at("dim").get<int>();
    return k;
  }
  if (kind == "torus")
    return Torus{j.at("big_radius").get<double>(),
                 j.at("small_radius").get<double>()};
  if (kind == "plane_patch") return PlanePatch{j.at("extent").get<double>()};
  if (kind == "helix")
    return Helix{j.at("radius").get<double>(), j.at("pitch").get<double>(),
                 j.at("t_min").get<double>(), j.at("t_max").get<double>()};
  if (kind == "swiss_roll")
    return SwissRoll{j.at("t_min").get<double>(), j.at("t_max").get<double>(),
                     j.at("h_min").get<double>(), j.at("h_max").get<double>(),
                     j.at("scale").get<double>()};
  if (kind == "affine_gaussian") {
    AffineGaussian k;
    k.offset = vector_from_json(j.at("offset"));
    k.basis = matrix_from_json(j.at("basis"));
    k.intrinsic_cov = matrix_from_json(j.at("intrinsic_cov"));
    return k;
  }
  throw ParseError("unknown stratum kind: " + kind);
}

}  // namespace

nlohmann::json spec_to_json(const StratifiedSpaceSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["weights"] = vector_to_json(spec.weights);
  j["noise_sigma"] = spec.noise_sigma;
  j["ambient_dim"] = spec.ambient_dim;
  j["embed_seed"] = spec.embed_seed;
  nlohmann::json strata_json = nlohmann::json::array();
  for (const auto& s : spec.strata) {
    nlohmann::json sj = kind_to_json(s.kind);
    if (s.translation.size() > 0)
      sj["translation"] = vector_to_json(s.translation);
    strata_json.push_back(std::move(sj));
  }
  j["strata"] = std::move(strata_json);
  return j;
}

StratifiedSpaceSpec spec_from_json(const nlohmann::json& j) {
  StratifiedSpaceSpec spec;
  spec.name = j.value("name", std::string());
  spec.weights = vector_from_json(j.at("weights"));
  spec.noise_sigma = j.value("noise_sigma", 0.0);
  spec.ambient_dim = j.value("ambient_dim", 0);
  spec.embed_seed = j.value("embed_seed", std::uint64_t(0));
  for (const auto& sj : j.at("strata")) {
    StratumSpec s;
    s.kind = kind_from_json(sj);
    if (sj.contains("translation"))
      s.translation = vector_from_json(sj.at("translation"));
    spec.strata.push_back(std::move(s));
  }
  spec.validate();
  return spec;
}

}  // namespace stratlearn::strata
