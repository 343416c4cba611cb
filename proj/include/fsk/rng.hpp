#pragma once
// Deterministic random number generation.
//
// Everything random in fsk derives from SplitMix64 (Steele, Lea & Flood,
// "Fast splittable pseudorandom number generators", OOPSLA 2014). Two
// interfaces are provided:
//
//   SplitMix64           - a tiny sequential engine for model generation.
//   counter_normal(...)  - a counter-based standard normal: the value is a
//                          pure function of (seed, stream, index), so
//                          sampling is reproducible for a fixed seed no
//                          matter how work is split across threads.
//
// The algorithm is part of the output contract: kRngVersion is bumped if the
// mapping from (seed, stream, index) to values ever changes.

#include <cmath>
#include <cstdint>

namespace fsk {

inline constexpr int kRngVersion = 1;

namespace detail {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

// SplitMix64 output mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform double in (0, 1]: 53 mantissa bits, never 0 so log() is safe.
inline double to_unit_open(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace detail

// Sequential SplitMix64 engine.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::kGamma;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

// Uniform double in (0, 1] addressed by (seed, stream, index).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index) {
  // Decorrelate the three coordinates with independent mixes before the
  // final output mix.
  std::uint64_t h = detail::mix64(seed + detail::kGamma);
  h ^= detail::mix64(stream + 0x8E9D5AAF9AD6BFF9ull);
  h += detail::kGamma * (index + 1);
  return detail::to_unit_open(detail::mix64(h));
}

// Standard normal addressed by (seed, stream, index), via the Box-Muller
// cosine branch on two counter uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index) {
  const double u1 = counter_uniform(seed, 2 * stream, index);
  const double u2 = counter_uniform(seed, 2 * stream + 1, index);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace fsk
