#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spc/rng.hpp"

using namespace spc;

TEST_CASE("identical seeds give identical sequences") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are independent of derivation order") {
  auto a = Rng::stream(9, 4, 2, 0);
  auto b = Rng::stream(9, 4, 2, 0);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  auto c = Rng::stream(9, 4, 3, 0);
  CHECK(Rng::stream(9, 4, 2, 0).next_u64() != c.next_u64());
}

TEST_CASE("uniform01 lies in [0,1) and has the right mean") {
  Rng rng(77);
  double acc = 0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    acc += u;
  }
  // mean 0.5, sd of the estimate = 1/sqrt(12 * trials) ~ 6.5e-4
  CHECK(std::fabs(acc / trials - 0.5) < 4e-3);
}

TEST_CASE("normal moments") {
  Rng rng(5);
  double m1 = 0, m2 = 0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
  }
  m1 /= trials;
  m2 /= trials;
  CHECK(std::fabs(m1) < 0.02);
  CHECK(std::fabs(m2 - 1.0) < 0.03);
}

TEST_CASE("poisson mean and variance, both regimes") {
  for (double mean : {3.0, 17.5, 80.0, 1000.0}) {
    Rng rng(101);
    const int trials = 20000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < trials; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      m1 += k;
      m2 += k * k;
    }
    m1 /= trials;
    m2 = m2 / trials - m1 * m1;
    const double se_mean = std::sqrt(mean / trials);
    CHECK(std::fabs(m1 - mean) < 5 * se_mean);
    CHECK(std::fabs(m2 - mean) < 0.1 * mean + 5 * se_mean * std::sqrt(mean));
  }
}

TEST_CASE("poisson edge cases") {
  Rng rng(1);
  CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-1.0), InvalidParameter);
}

TEST_CASE("binomial matches its mean and bounds") {
  Rng rng(202);
  const std::int64_t n = 50;
  const double p = 0.3;
  const int trials = 20000;
  double acc = 0;
  for (int i = 0; i < trials; ++i) {
    const std::int64_t k = rng.binomial(n, p);
    REQUIRE(k >= 0);
    REQUIRE(k <= n);
    acc += static_cast<double>(k);
  }
  const double se = std::sqrt(n * p * (1 - p) / trials);
  CHECK(std::fabs(acc / trials - n * p) < 5 * se);
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
}
