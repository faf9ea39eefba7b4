#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "stratlearn/common.hpp"

namespace stratlearn {

// Deterministic random number generation.
//
// All randomness in the library flows through Rng, a xoshiro256++ generator
// seeded via SplitMix64. Sub-streams are derived with derive_stream(root,
// stage_name, index): the stage name is hashed with FNV-1a 64 and mixed with
// the root seed and index through SplitMix64. Every per-point / per-chain /
// per-projection loop draws from its own derived stream, so results do not
// depend on thread scheduling. Uniform doubles use the top 53 bits; normals
// use Box-Muller on open-interval uniforms. None of this depends on
// implementation-defined <random> distributions, so outputs are identical
// across platforms.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Sub-stream seed for (root, stage, index).
inline std::uint64_t derive_stream(std::uint64_t root, std::string_view stage,
                                   std::uint64_t index) {
  std::uint64_t s = root ^ fnv1a64(stage);
  std::uint64_t mixed = splitmix64(s);
  s = mixed ^ (index * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe under log().
  double uniform_open() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (uncached).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Multiply-shift; bias is negligible for n << 2^64.
    unsigned __int128 m = (unsigned __int128)next_u64() * n;
    return (std::uint64_t)(m >> 64);
  }

  double gumbel() { return -std::log(-std::log(uniform_open())); }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace stratlearn
