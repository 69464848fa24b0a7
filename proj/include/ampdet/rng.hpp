#pragma once

#include <cmath>
#include <cstdint>

#include "ampdet/types.hpp"

namespace ampdet {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hashes a tag into a seed so that derived streams are independent of each
/// other and of evaluation order. Chain calls to mix several tags. Returns
/// the mixed output (not the additive state), so nearby tags map to
/// unrelated seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t s = base + 0x9e3779b97f4a7c15ULL * (tag + 0x632be59bd9b4e019ULL);
  const std::uint64_t first = splitmix64_next(s);
  return first ^ splitmix64_next(s);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1, std::uint64_t t2) {
  return derive_seed(derive_seed(base, t1), t2);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1, std::uint64_t t2,
                                 std::uint64_t t3) {
  return derive_seed(derive_seed(base, t1, t2), t3);
}

/// Deterministic SplitMix64-backed generator. Results do not depend on the
/// standard library, so traces are reproducible across platforms and thread
/// schedules as long as every parallel unit owns its own derived stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(derive_seed(seed, 0x45d9f3bULL)) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [lo, hi] inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return lo + next_u64() % (hi - lo + 1);
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double a = kTwoPi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex normal with E|z|^2 = 1.
  Complex cnormal() {
    double re = normal();
    double im = normal();
    return Complex(re * kInvSqrt2, im * kInvSqrt2);
  }

  CVec cnormal_vector(Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cnormal();
    return v;
  }

  /// QPSK symbol from {(+-1 +- 1j)/sqrt(2)}.
  Complex qpsk() {
    std::uint64_t bits = next_u64();
    double re = (bits & 1u) ? kInvSqrt2 : -kInvSqrt2;
    double im = (bits & 2u) ? kInvSqrt2 : -kInvSqrt2;
    return Complex(re, im);
  }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace ampdet
