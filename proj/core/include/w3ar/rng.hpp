#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace w3ar {

/// Seeded random stream with platform-independent draws.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so the conversions to uniform/normal/integer draws
/// live here. Every random quantity in the library flows through this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (one draw per call, the pair is not cached).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Derive an independent stream for a (seed, tag...) tuple.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
    return splitmix(seed ^ splitmix(tag + 0x9e3779b97f4a7c15ULL));
  }

 private:
  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace w3ar
