#pragma once
// Memory-efficiency transforms for coding matrices: fixed-bit uniform
// quantization (per-row scales) and Fourier-coefficient truncation, plus the
// RMSE-vs-budget sweep. Quantization happens on the stored matrix; both the
// encoder and the decode template are derived from the same dequantized
// values, so there is a single code path.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "spc/codes.hpp"
#include "spc/common.hpp"
#include "spc/evalharness.hpp"
#include "spc/signal.hpp"

namespace spc {

// Per-row uniform quantization to 2^bits levels over [row min, row max].
// bits >= 53 is an identity transform (the step would fall below double
// precision); a constant row maps to a single level.
inline CodingMatrix quantize_matrix(const CodingMatrix& d, unsigned bits) {
  if (bits < 1 || bits > 64) throw InvalidParameter("quantize_matrix: need 1 <= bits <= 64");
  CodingMatrix out = d;
  out.label = d.label + "_q" + fmt_size(bits);
  if (bits >= 53) return out;
  const double levels = static_cast<double>((1ull << bits) - 1ull);
  for (std::size_t r = 0; r < d.k; ++r) {
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < d.n; ++i) {
      const double v = d.at(r, i);
      lo = v < lo ? v : lo;
      hi = v > hi ? v : hi;
    }
    if (!(hi > lo)) {
      for (std::size_t i = 0; i < d.n; ++i) out.at(r, i) = lo;
      continue;
    }
    const double step = (hi - lo) / levels;
    for (std::size_t i = 0; i < d.n; ++i) {
      double q = std::floor((d.at(r, i) - lo) / step + 0.5);
      if (q < 0.0) q = 0.0;
      if (q > levels) q = levels;
      out.at(r, i) = lo + q * step;
    }
  }
  return out;
}

// Stores a quantized matrix in SPCM dtype-1 form (u8 level indices plus f64
// per-row scales); only bit depths up to 8 fit the on-disk level width.
inline void save_matrix_quantized(const CodingMatrix& d, unsigned bits, const std::string& path) {
  if (bits < 1 || bits > 8)
    throw InvalidParameter("save_matrix_quantized: dtype-1 storage holds 1..8 bits");
  std::string out;
  out += "SPCM";
  detail::put_u32(out, kSpcmVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(d.k));
  detail::put_u32(out, static_cast<std::uint32_t>(d.n));
  out.push_back(static_cast<char>(1));
  const double levels = static_cast<double>((1u << bits) - 1u);
  for (std::size_t r = 0; r < d.k; ++r) {
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < d.n; ++i) {
      const double v = d.at(r, i);
      lo = v < lo ? v : lo;
      hi = v > hi ? v : hi;
    }
    detail::put_f64(out, lo);
    detail::put_f64(out, hi);
    out.push_back(static_cast<char>(bits));
    const double step = hi > lo ? (hi - lo) / levels : 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      double q = step > 0.0 ? std::floor((d.at(r, i) - lo) / step + 0.5) : 0.0;
      if (q < 0.0) q = 0.0;
      if (q > levels) q = levels;
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(q)));
    }
  }
  detail::write_file(path, out);
}

namespace detail {

// Direct DFT for arbitrary N (rows can be any length); FFT path for pow2.
inline void row_dft(const std::vector<double>& x, std::vector<double>& re,
                    std::vector<double>& im) {
  const std::size_t n = x.size();
  re.assign(n, 0.0);
  im.assign(n, 0.0);
  if (is_pow2(n) && n >= 8) {
    re = x;
    fft_inplace(re, im, false);
    return;
  }
  const double twopi = 6.283185307179586476925286766559;
  for (std::size_t k = 0; k < n; ++k) {
    double sr = 0, si = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -twopi * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(n);
      sr += x[j] * std::cos(ang);
      si += x[j] * std::sin(ang);
    }
    re[k] = sr;
    im[k] = si;
  }
}

inline std::vector<double> row_idft(std::vector<double> re, std::vector<double> im) {
  const std::size_t n = re.size();
  if (is_pow2(n) && n >= 8) {
    fft_inplace(re, im, true);
    return re;
  }
  const double twopi = 6.283185307179586476925286766559;
  std::vector<double> x(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = twopi * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(n);
      s += re[k] * std::cos(ang) - im[k] * std::sin(ang);
    }
    x[j] = s / static_cast<double>(n);
  }
  return x;
}

}  // namespace detail

// Keeps DC plus the n_coeffs largest-magnitude harmonics of each row
// (conjugate pairs count once), zeroes the rest, inverse-transforms.
inline CodingMatrix fourier_compress(const CodingMatrix& d, std::size_t n_coeffs) {
  if (n_coeffs < 1 || n_coeffs > d.n / 2)
    throw InvalidParameter("fourier_compress: need 1 <= n_coeffs <= N/2");
  CodingMatrix out = d;
  out.label = d.label + "_f" + fmt_size(n_coeffs);
  const std::size_t n = d.n;
  const std::size_t half = n / 2;
  std::vector<double> re, im;
  for (std::size_t r = 0; r < d.k; ++r) {
    detail::row_dft(d.row_vec(r), re, im);
    std::vector<std::size_t> harmonics(half);
    for (std::size_t m = 1; m <= half; ++m) harmonics[m - 1] = m;
    std::stable_sort(harmonics.begin(), harmonics.end(), [&](std::size_t a, std::size_t b) {
      const double ma = re[a] * re[a] + im[a] * im[a];
      const double mb = re[b] * re[b] + im[b] * im[b];
      return ma > mb;
    });
    std::vector<char> keep(n, 0);
    keep[0] = 1;  // DC always kept
    for (std::size_t j = 0; j < n_coeffs && j < harmonics.size(); ++j) {
      const std::size_t m = harmonics[j];
      keep[m] = 1;
      keep[(n - m) % n] = 1;  // conjugate partner
    }
    for (std::size_t k2 = 0; k2 < n; ++k2)
      if (!keep[k2]) {
        re[k2] = 0.0;
        im[k2] = 0.0;
      }
    std::vector<double> rec = detail::row_idft(re, im);
    for (std::size_t i = 0; i < n; ++i) out.at(r, i) = rec[i];
  }
  return out;
}

struct BudgetRow {
  std::string kind;  // "full", "bits", "coeffs"
  double budget = 0;
  double mae_bins = 0, rmse_bins = 0;
  double outlier_rate = 0;
};

struct BudgetSweepConfig {
  Illumination illum;
  Irf irf;
  double phi = 1000.0;
  double sbr = 0.1;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  TemplateSource template_source = TemplateSource::Waveform;
  std::size_t threads = 1;
};

// RMSE per budget level. All variants share the trial streams (the histogram
// depends only on the illumination), so rows differ purely through the
// matrix representation.
inline std::vector<BudgetRow> budget_sweep(const CodingMatrix& d,
                                           const std::vector<unsigned>& bit_budgets,
                                           const std::vector<std::size_t>& coeff_budgets,
                                           const BudgetSweepConfig& cfg) {
  SweepConfig sweep;
  sweep.phi_grid = {cfg.phi};
  sweep.sbr_grid = {cfg.sbr};
  sweep.trials = cfg.trials;
  sweep.seed = cfg.seed;
  sweep.irf = cfg.irf;
  sweep.threads = cfg.threads;

  std::vector<BudgetRow> rows;
  auto add_scheme = [&](const std::string& kind, double budget, CodingMatrix m) {
    SchemeSpec s;
    s.label = kind + ":" + fmt_double(budget);
    s.d = std::move(m);
    s.illum = cfg.illum;
    s.template_source = cfg.template_source;
    s.decode = DecodeKind::Zncc;
    sweep.schemes.push_back(std::move(s));
    BudgetRow row;
    row.kind = kind;
    row.budget = budget;
    rows.push_back(row);
  };

  add_scheme("full", 64, d);
  for (unsigned bits : bit_budgets) add_scheme("bits", bits, quantize_matrix(d, bits));
  for (std::size_t c : coeff_budgets)
    add_scheme("coeffs", static_cast<double>(c), fourier_compress(d, c));

  SweepResult result = run_sweep(sweep);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].mae_bins = result.cells[i].mae_bins;
    rows[i].rmse_bins = result.cells[i].rmse_bins;
    rows[i].outlier_rate = result.cells[i].outlier_rate;
  }
  return rows;
}

inline std::string budget_rows_csv(const std::vector<BudgetRow>& rows, double phi, double sbr,
                                   std::size_t trials) {
  std::string out = "kind,budget,phi,sbr,mae_bins,rmse_bins,outlier_rate,trials\n";
  for (const auto& r : rows)
    out += r.kind + "," + fmt_double(r.budget) + "," + fmt_double(phi) + "," + fmt_double(sbr) +
           "," + fmt_double(r.mae_bins) + "," + fmt_double(r.rmse_bins) + "," +
           fmt_double(r.outlier_rate) + "," + fmt_size(trials) + "\n";
  return out;
}

}  // namespace spc
