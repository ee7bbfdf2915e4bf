#pragma once
// Coding matrices D (K x N), their IRF-correlated decode templates D', and
// the SPCM serialization format:
//
//   SPCM  magic "SPCM", u32 version=1, u32 K, u32 N, u8 dtype, payload.
//         dtype 0: K*N little-endian f64, row-major.
//         dtype 1: per row f64 lo, f64 hi, u8 bits (<= 8), then N u8 level
//                  indices (value = lo + level * (hi-lo)/(2^bits - 1)).

#include <cstdint>
#include <string>
#include <vector>

#include "spc/common.hpp"
#include "spc/io.hpp"
#include "spc/signal.hpp"

namespace spc {

struct CodingMatrix {
  std::size_t k = 0, n = 0;
  std::vector<double> rows;  // row-major, k*n
  std::string label;

  double& at(std::size_t r, std::size_t c) { return rows[r * n + c]; }
  double at(std::size_t r, std::size_t c) const { return rows[r * n + c]; }
  const double* row(std::size_t r) const { return rows.data() + r * n; }

  std::vector<double> row_vec(std::size_t r) const {
    return std::vector<double>(rows.begin() + static_cast<std::ptrdiff_t>(r * n),
                               rows.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
};

// First K rows of the DFT matrix without the zeroth harmonic, realized as
// real cos/-sin pairs: harmonic m = 1..K/2 gives row 2m-2 = cos(2 pi m i / N)
// and row 2m-1 = -sin(2 pi m i / N).
inline CodingMatrix truncated_fourier(std::size_t k, std::size_t n) {
  if (k % 2 != 0)
    throw InvalidParameter("truncated_fourier: k must be even (rows come in cos/-sin pairs)");
  if (k < 2 || k > n) throw InvalidParameter("truncated_fourier: need 2 <= k <= n");
  CodingMatrix d;
  d.k = k;
  d.n = n;
  d.label = "fourier";
  d.rows.resize(k * n);
  const double twopi = 6.283185307179586476925286766559;
  for (std::size_t m = 1; m <= k / 2; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = twopi * static_cast<double>(m) * static_cast<double>(i) /
                         static_cast<double>(n);
      d.at(2 * m - 2, i) = std::cos(ang);
      d.at(2 * m - 1, i) = -std::sin(ang);
    }
  }
  return d;
}

// j-th codeword of the k-bit reflected-binary Gray sequence.
inline std::uint64_t gray_codeword(std::uint64_t j) { return j ^ (j >> 1); }

// Rows are the bits of the k-bit Gray sequence over 2^k codewords, treated as
// a cyclic step sequence and linearly interpolated to N samples. Codeword
// values anchor at the segment left edges (sample i maps to fractional
// codeword index u = i * 2^k / N, exact at integer u), which reproduces the
// plain step sequence whenever N is a multiple of 2^k.
inline CodingMatrix continuous_gray(std::size_t k, std::size_t n) {
  if (k < 1 || k > 24) throw InvalidParameter("continuous_gray: need 1 <= k <= 24");
  const std::uint64_t words = 1ull << k;
  if (n < words)
    throw InvalidParameter("continuous_gray: n must be at least 2^k = " + fmt_size(words));
  CodingMatrix d;
  d.k = k;
  d.n = n;
  d.label = "gray";
  d.rows.resize(k * n);
  for (std::size_t bit = 0; bit < k; ++bit) {
    // bit index 0 is the most significant: row 0 varies slowest.
    const std::size_t shift = k - 1 - bit;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) * static_cast<double>(words) /
                       static_cast<double>(n);
      const std::uint64_t u0 = static_cast<std::uint64_t>(u);
      const double w = u - static_cast<double>(u0);
      const double v0 = static_cast<double>((gray_codeword(u0 % words) >> shift) & 1u);
      const double v1 = static_cast<double>((gray_codeword((u0 + 1) % words) >> shift) & 1u);
      d.at(bit, i) = (1.0 - w) * v0 + w * v1;
    }
  }
  return d;
}

// Full-resolution histogramming: D is the N x N identity.
inline CodingMatrix identity_frh(std::size_t n) {
  if (n < 1) throw InvalidParameter("identity_frh: n must be >= 1");
  CodingMatrix d;
  d.k = n;
  d.n = n;
  d.label = "identity";
  d.rows.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d.at(i, i) = 1.0;
  return d;
}

// Coarse histogramming: row j is the indicator of the j-th contiguous block
// of ceil(n/k) bins; the last block absorbs any remainder.
inline CodingMatrix coarse(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) throw InvalidParameter("coarse: need 1 <= k <= n");
  CodingMatrix d;
  d.k = k;
  d.n = n;
  d.label = "coarse";
  d.rows.assign(k * n, 0.0);
  const std::size_t block = (n + k - 1) / k;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t lo = j * block;
    const std::size_t hi = (j + 1 == k) ? n : std::min(n, lo + block);
    for (std::size_t i = lo; i < hi; ++i) d.at(j, i) = 1.0;
  }
  return d;
}

// Decode template: D' = D row-correlated with the emitted waveform shape,
// plus the per-column zero-mean unit-norm cache used by ZNCC scoring. The
// cache is stored column-major so scoring walks contiguous memory.
struct DecodeTemplate {
  std::size_t k = 0, n = 0;
  std::vector<double> dprime;      // row-major, k*n
  std::vector<double> znorm_cols;  // column-major, n*k; zero where degenerate
  std::vector<std::uint8_t> degenerate;  // per column

  const double* zcol(std::size_t i) const { return znorm_cols.data() + i * k; }
};

// D'_{k,i} = sum_j D_{k,j} * shape_{(j-i) mod N}. The shape is normalized to
// sum 1 internally; an all-zero shape is an error.
inline DecodeTemplate correlate_with_waveform(const CodingMatrix& d,
                                              const std::vector<double>& s_shape) {
  if (s_shape.size() != d.n)
    throw DimensionMismatch("correlate_with_waveform: shape length != matrix n");
  const double sum = vec_sum(s_shape);
  if (!(sum > 0.0)) throw InvalidParameter("correlate_with_waveform: all-zero waveform shape");
  std::vector<double> shape(s_shape);
  for (auto& v : shape) v /= sum;

  DecodeTemplate t;
  t.k = d.k;
  t.n = d.n;
  t.dprime.resize(d.k * d.n);
  for (std::size_t r = 0; r < d.k; ++r) {
    std::vector<double> corr = circular_correlate(d.row_vec(r), shape);
    for (std::size_t i = 0; i < d.n; ++i) t.dprime[r * d.n + i] = corr[i];
  }

  t.znorm_cols.assign(d.n * d.k, 0.0);
  t.degenerate.assign(d.n, 0);
  std::vector<double> col(d.k);
  for (std::size_t i = 0; i < d.n; ++i) {
    double mean = 0;
    for (std::size_t r = 0; r < d.k; ++r) mean += t.dprime[r * d.n + i];
    mean /= static_cast<double>(d.k);
    double norm2 = 0;
    for (std::size_t r = 0; r < d.k; ++r) {
      col[r] = t.dprime[r * d.n + i] - mean;
      norm2 += col[r] * col[r];
    }
    const double norm = std::sqrt(norm2);
    if (norm <= 1e-12) {
      t.degenerate[i] = 1;
      continue;
    }
    for (std::size_t r = 0; r < d.k; ++r) t.znorm_cols[i * d.k + r] = col[r] / norm;
  }
  return t;
}

inline constexpr std::uint32_t kSpcmVersion = 1;

inline void save_matrix(const CodingMatrix& d, const std::string& path) {
  std::string out;
  out += "SPCM";
  detail::put_u32(out, kSpcmVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(d.k));
  detail::put_u32(out, static_cast<std::uint32_t>(d.n));
  out.push_back(static_cast<char>(0));  // dtype f64
  for (double v : d.rows) detail::put_f64(out, v);
  detail::write_file(path, out);
}

inline CodingMatrix load_matrix(const std::string& path) {
  detail::ByteReader r(detail::read_file(path), path);
  if (r.magic4("magic") != "SPCM") throw IoError(path + ": bad magic, expected SPCM");
  const std::uint32_t version = r.u32("version");
  if (version != kSpcmVersion)
    throw IoError(path + ": unsupported SPCM version " + fmt_size(version));
  const std::uint64_t k = r.u32("k");
  const std::uint64_t n = r.u32("n");
  if (k == 0 || n == 0 || k * n > (1ull << 31))
    throw IoError(path + ": unreasonable matrix dims " + fmt_size(k) + "x" + fmt_size(n));
  const std::uint8_t dtype = r.u8("dtype");
  CodingMatrix d;
  d.k = k;
  d.n = n;
  d.label = "file";
  d.rows.resize(k * n);
  if (dtype == 0) {
    for (auto& v : d.rows) v = r.f64("matrix value");
  } else if (dtype == 1) {
    for (std::size_t row = 0; row < k; ++row) {
      const double lo = r.f64("row lo");
      const double hi = r.f64("row hi");
      const std::uint8_t bits = r.u8("row bits");
      if (bits < 1 || bits > 8) throw IoError(path + ": quantized row bits out of range");
      const double levels = static_cast<double>((1ull << bits) - 1);
      const double step = levels > 0 ? (hi - lo) / levels : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t lv = r.u8("level");
        d.rows[row * n + i] = lo + static_cast<double>(lv) * step;
      }
    }
  } else {
    throw IoError(path + ": unknown dtype tag " + fmt_size(dtype));
  }
  r.expect_end();
  return d;
}

inline void save_matrix_csv(const CodingMatrix& d, const std::string& path) {
  save_csv_grid(d.rows, d.k, d.n, path);
}

}  // namespace spc
