#pragma once
// Deterministic random streams.
//
// Generator: xoshiro256++ seeded through splitmix64. All distributions are
// implemented here rather than via <random> because the standard library
// distribution algorithms are unspecified and differ between implementations;
// everything below produces identical sequences on any conforming platform.
//
// Rng::stream(seed, a, b, c) derives an independent generator for a work item
// (cell index, trial index, pixel index...). Parallel code draws from
// per-item streams so results do not depend on scheduling or thread count.

#include <array>
#include <cmath>
#include <cstdint>

#include "spc/common.hpp"

namespace spc {

struct SplitMix64 {
  std::uint64_t state = 0;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    SplitMix64 sm{seed};
    sm.state = sm.next() ^ (a + 0x9e3779b97f4a7c15ull);
    sm.state = sm.next() ^ (b + 0xbf58476d1ce4e5b9ull);
    sm.state = sm.next() ^ (c + 0x94d049bb133111ebull);
    Rng r(sm.next());
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidParameter("Rng::below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller; one value per call (no cached spare, so a
  // stream's output depends only on the call sequence).
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Poisson sampling: Knuth multiplication below 30, PTRS transformed
  // rejection (Hoermann 1993) above.
  std::int64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw InvalidParameter("poisson: mean must be non-negative");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      double prod = 1.0;
      std::int64_t k = 0;
      for (;;) {
        prod *= uniform01();
        if (prod <= limit) return k;
        ++k;
      }
    }
    return poisson_ptrs(mean);
  }

  // Binomial(n, p) as a Bernoulli sum. O(n) per call; fine for the cycle
  // counts used here (evaluation sweeps sample Poisson instead).
  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0) throw InvalidParameter("binomial: n must be non-negative");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("binomial: p must be in [0,1]");
    if (p == 0.0) return 0;
    if (p == 1.0) return n;
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i)
      if (uniform01() < p) ++k;
    return k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::int64_t poisson_ptrs(double mu) {
    const double slam = std::sqrt(mu);
    const double loglam = std::log(mu);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = uniform01() - 0.5;
      double v = uniform01();
      double us = 0.5 - std::fabs(u);
      double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          -mu + kf * loglam - std::lgamma(kf + 1.0))
        return static_cast<std::int64_t>(kf);
    }
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace spc
