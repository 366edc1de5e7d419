#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mobiscope/error.hpp"

// Random helpers with pinned semantics. std::uniform_int_distribution and
// friends are implementation-defined, so every sampler that feeds an output
// is written out here and only mt19937_64 itself comes from the library.
namespace mobiscope {

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed & 0xffffffffu),
                    static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream & 0xffffffffu),
                    static_cast<uint32_t>(stream >> 32)};
  return Rng(seq);
}

// Uniform in [0, 1) with 53 random bits.
inline double u01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

// Unbiased integer in [0, n) by rejection.
inline uint64_t bounded(Rng& rng, uint64_t n) {
  if (n == 0) fail(errc::parameter, "bounded: n must be positive");
  uint64_t threshold = (0 - n) % n;
  for (;;) {
    uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

// Marsaglia polar method; no state beyond the generator (the spare is dropped
// so successive calls do not depend on call parity).
inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  for (;;) {
    double u = 2.0 * u01(rng) - 1.0;
    double v = 2.0 * u01(rng) - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return mean + stddev * u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

// Index drawn proportionally to the (non-negative) weights.
inline size_t discrete(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) fail(errc::parameter, "discrete: bad weight");
    total += w;
  }
  if (total <= 0.0) fail(errc::parameter, "discrete: weights sum to zero");
  double t = u01(rng) * total;
  double cum = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (t < cum) return i;
  }
  return weights.size() - 1;
}

template <typename T>
void shuffle_vec(Rng& rng, std::vector<T>& v) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace mobiscope
