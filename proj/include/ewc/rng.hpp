#pragma once

// Deterministic random streams. The engine is std::mt19937_64 (whose output
// sequence is pinned by the standard); all value mappings are written out
// explicitly here instead of using std::*_distribution, so a given seed
// produces the same draws on every platform and standard library.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace ewc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Independent engine for stream `index` of kind `salt` under one master seed.
inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t index = 0,
                                   std::uint64_t salt = 0) {
  std::uint64_t s = master;
  const std::uint64_t a = splitmix64(s);
  s ^= (index + 1) * 0xD1B54A32D192ED03ull;
  const std::uint64_t b = splitmix64(s);
  s ^= (salt + 1) * 0x8CB92BA72F3D8DD7ull;
  const std::uint64_t c = splitmix64(s);
  return std::mt19937_64(a ^ (b * 0x9E3779B97F4A7C15ull) ^ c);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

// Uniform index in [0, n); n must be >= 1.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Standard normal via the Marsaglia polar method. The spare value is
// discarded so every call consumes a fresh, history-independent pair.
inline double gaussian(std::mt19937_64& rng) {
  for (;;) {
    const double u = 2.0 * uniform_unit(rng) - 1.0;
    const double v = 2.0 * uniform_unit(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

// Index k with probability weights[k] / sum(weights). Weights must be
// nonnegative with a positive sum.
inline Eigen::Index categorical(std::mt19937_64& rng, const Eigen::VectorXd& weights) {
  const double target = uniform_unit(rng) * weights.sum();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (target < acc) return k;
  }
  return weights.size() - 1;
}

}  // namespace ewc
