#pragma once
// Circular signal primitives: convolution, correlation, fractional shifts.
//
// Waveforms are periodic (pulsed laser, period tau = N * delta), so every
// operation here wraps. Power-of-two lengths >= 64 go through a radix-2 FFT;
// anything else is computed directly.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "spc/common.hpp"

namespace spc {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline double vec_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

inline double vec_max(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = x > m ? x : m;
  return m;
}

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double vec_l2(const std::vector<double>& v) { return std::sqrt(vec_dot(v, v)); }

namespace detail {

// In-place iterative radix-2 FFT. inverse=true applies the 1/N factor.
inline void fft_inplace(std::vector<double>& re, std::vector<double>& im, bool inverse) {
  const std::size_t n = re.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  const double sgn = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sgn * 2.0 * 3.14159265358979323846 / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::size_t a = i + j, b = i + j + len / 2;
        const double xr = re[a], xi = im[a];
        const double yr = re[b] * cr - im[b] * ci;
        const double yi = re[b] * ci + im[b] * cr;
        re[a] = xr + yr;
        im[a] = xi + yi;
        re[b] = xr - yr;
        im[b] = xi - yi;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      re[i] *= inv;
      im[i] *= inv;
    }
  }
}

inline bool use_fft(std::size_t n) { return is_pow2(n) && n >= 64; }

}  // namespace detail

// out_i = sum_j a_j * b_{(i-j) mod N}
inline std::vector<double> circular_convolve(const std::vector<double>& a,
                                             const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (b.size() != n)
    throw DimensionMismatch("circular_convolve: lengths differ (" + fmt_size(n) + " vs " +
                            fmt_size(b.size()) + ")");
  if (n == 0) return {};
  std::vector<double> out(n, 0.0);
  if (detail::use_fft(n)) {
    std::vector<double> ar(a), ai(n, 0.0), br(b), bi(n, 0.0);
    detail::fft_inplace(ar, ai, false);
    detail::fft_inplace(br, bi, false);
    for (std::size_t k = 0; k < n; ++k) {
      const double r = ar[k] * br[k] - ai[k] * bi[k];
      const double i = ar[k] * bi[k] + ai[k] * br[k];
      ar[k] = r;
      ai[k] = i;
    }
    detail::fft_inplace(ar, ai, true);
    for (std::size_t i = 0; i < n; ++i) out[i] = ar[i];
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] * b[(i + n - j) % n];
    out[i] = s;
  }
  return out;
}

// out_i = sum_j a_j * b_{(j-i) mod N}
inline std::vector<double> circular_correlate(const std::vector<double>& a,
                                              const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (b.size() != n)
    throw DimensionMismatch("circular_correlate: lengths differ (" + fmt_size(n) + " vs " +
                            fmt_size(b.size()) + ")");
  if (n == 0) return {};
  std::vector<double> out(n, 0.0);
  if (detail::use_fft(n)) {
    std::vector<double> ar(a), ai(n, 0.0), br(b), bi(n, 0.0);
    detail::fft_inplace(ar, ai, false);
    detail::fft_inplace(br, bi, false);
    // C = A . conj(B)
    for (std::size_t k = 0; k < n; ++k) {
      const double r = ar[k] * br[k] + ai[k] * bi[k];
      const double i = -ar[k] * bi[k] + ai[k] * br[k];
      ar[k] = r;
      ai[k] = i;
    }
    detail::fft_inplace(ar, ai, true);
    for (std::size_t i = 0; i < n; ++i) out[i] = ar[i];
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] * b[(j + n - i) % n];
    out[i] = s;
  }
  return out;
}

// Circular shift by an integer count: out_i = v_{(i-k) mod N}.
inline std::vector<double> shift_circular(const std::vector<double>& v, std::int64_t k) {
  const std::int64_t n = static_cast<std::int64_t>(v.size());
  if (n == 0) return {};
  std::vector<double> out(v.size());
  const std::int64_t kk = ((k % n) + n) % n;
  for (std::int64_t i = 0; i < n; ++i) out[(i + kk) % n] = v[i];
  return out;
}

// Fractional circular shift with linear interpolation between the two
// adjacent integer shifts: out = (1-w)*shift(v, i0) + w*shift(v, i0+1)
// with i0 = floor(d), w = d - i0. Exact for integer d.
inline std::vector<double> shift_circular_linear(const std::vector<double>& v, double d) {
  const std::int64_t n = static_cast<std::int64_t>(v.size());
  if (n == 0) return {};
  const double df = std::floor(d);
  const double w = d - df;
  std::int64_t i0 = static_cast<std::int64_t>(df) % n;
  if (i0 < 0) i0 += n;
  std::vector<double> out(v.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t a = (i - i0 + 2 * n) % n;
    const std::int64_t b = (a - 1 + n) % n;
    out[i] = (1.0 - w) * v[a] + w * v[b];
  }
  return out;
}

// Circular distance between two bin positions in [0, period/2].
inline double circular_error(double a, double b, double period) {
  double d = std::fabs(a - b);
  d = std::fmod(d, period);
  return d <= period / 2.0 ? d : period - d;
}

}  // namespace spc
