#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace qunravel {

/// SplitMix64 generator. Cheap to copy (one word of state) and trivially
/// splittable: independent streams are derived from (seed, index) by
/// hashing, so per-trajectory and per-particle streams do not depend on
/// how work is scheduled.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state = 0) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal variate (Box-Muller, no cached second value so the
  /// stream position is a pure function of the number of draws).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const { return state_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent stream number `index` of master seed `seed`.
inline SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(SplitMix64::mix(seed ^ SplitMix64::mix(index + 0x632be59bd9b4e019ULL)));
}

inline constexpr const char* kRngName = "splitmix64/stream(seed,index)";

}  // namespace qunravel
