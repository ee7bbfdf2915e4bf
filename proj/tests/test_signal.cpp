#include <catch2/catch_amalgamated.hpp>

#include "spc/rng.hpp"
#include "spc/signal.hpp"

using namespace spc;

namespace {

// Independent O(N^2) reference used to check the FFT path.
std::vector<double> conv_reference(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += a[j] * b[(i + n - j) % n];
  return out;
}

std::vector<double> corr_reference(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += a[j] * b[(j + n - i) % n];
  return out;
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("circular convolution hand example") {
  // [1,2,0,0] (*) [1,1,0,0]: out_0 = 1*1, out_1 = 1*1+2*1, out_2 = 2*1, out_3 = 0
  std::vector<double> a{1, 2, 0, 0}, b{1, 1, 0, 0};
  auto out = circular_convolve(a, b);
  REQUIRE(out.size() == 4);
  CHECK(out[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(out[1] == Catch::Approx(3.0).margin(1e-12));
  CHECK(out[2] == Catch::Approx(2.0).margin(1e-12));
  CHECK(out[3] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("convolution with a delta is the identity / a shift") {
  Rng rng(42);
  auto h = random_vec(16, rng, 0.0, 1.0);
  std::vector<double> delta(16, 0.0);
  delta[0] = 1.0;
  auto out = circular_convolve(delta, h);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(out[i] == Catch::Approx(h[i]).margin(1e-12));

  std::vector<double> delta5(16, 0.0);
  delta5[5] = 1.0;
  auto shifted = circular_convolve(delta5, h);
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(shifted[(i + 5) % 16] == Catch::Approx(h[i]).margin(1e-12));
}

TEST_CASE("FFT path matches direct summation") {
  Rng rng(7);
  for (std::size_t n : {64u, 128u, 1024u}) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);
    auto fast_conv = circular_convolve(a, b);
    auto slow_conv = conv_reference(a, b);
    auto fast_corr = circular_correlate(a, b);
    auto slow_corr = corr_reference(a, b);
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::fabs(fast_conv[i] - slow_conv[i]));
      worst = std::max(worst, std::fabs(fast_corr[i] - slow_corr[i]));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("convolution preserves mass") {
  Rng rng(3);
  auto a = random_vec(256, rng, 0.0, 2.0);
  auto b = random_vec(256, rng, 0.0, 1.0);
  auto out = circular_convolve(a, b);
  const double expect = vec_sum(a) * vec_sum(b);
  CHECK(vec_sum(out) == Catch::Approx(expect).epsilon(1e-6));
}

TEST_CASE("convolution linearity") {
  Rng rng(11);
  const std::size_t n = 128;
  auto a = random_vec(n, rng), b = random_vec(n, rng), h = random_vec(n, rng);
  const double alpha = 1.7, beta = -0.4;
  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = alpha * a[i] + beta * b[i];
  auto lhs = circular_convolve(mix, h);
  auto ca = circular_convolve(a, h);
  auto cb = circular_convolve(b, h);
  for (std::size_t i = 0; i < n; ++i) {
    const double rhs = alpha * ca[i] + beta * cb[i];
    CHECK(std::fabs(lhs[i] - rhs) <= 1e-9 * std::max(1.0, std::fabs(rhs)));
  }
}

TEST_CASE("length mismatch is an error") {
  std::vector<double> a(8, 1.0), b(9, 1.0);
  CHECK_THROWS_AS(circular_convolve(a, b), DimensionMismatch);
  CHECK_THROWS_AS(circular_correlate(a, b), DimensionMismatch);
}

TEST_CASE("fractional shift interpolates between integer shifts") {
  Rng rng(5);
  auto v = random_vec(32, rng);
  auto s_int = shift_circular_linear(v, 7.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(s_int[(i + 7) % 32] == Catch::Approx(v[i]).margin(1e-15));

  auto s_frac = shift_circular_linear(v, 7.25);
  auto s7 = shift_circular_linear(v, 7.0);
  auto s8 = shift_circular_linear(v, 8.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(s_frac[i] == Catch::Approx(0.75 * s7[i] + 0.25 * s8[i]).margin(1e-12));

  // negative depths wrap
  auto s_neg = shift_circular_linear(v, -3.0);
  auto s_pos = shift_circular_linear(v, 29.0);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(s_neg[i] == s_pos[i]);
}

TEST_CASE("circular error metric") {
  CHECK(circular_error(0.0, 1023.0, 1024.0) == Catch::Approx(1.0));
  CHECK(circular_error(10.0, 10.0, 1024.0) == 0.0);
  CHECK(circular_error(0.0, 512.0, 1024.0) == Catch::Approx(512.0));
  CHECK(circular_error(100.25, 100.75, 1024.0) == Catch::Approx(0.5));
}
