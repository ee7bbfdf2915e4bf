#pragma once
// Monte Carlo evaluation of coding schemes over (photon count, SBR) grids
// with Poisson noise, plus the peak-power-constrained pulsed baselines.
//
// Determinism: the RNG stream of a trial is derived from (seed, cell, trial)
// where the cell index covers only the (phi, sbr) grid position. Schemes are
// NOT part of the key, so every scheme sees the same depth draws (and, for
// identical illuminations, the same histograms), which makes scheme
// comparisons common-random-number paired and the sweep independent of
// scheduling and worker count.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "spc/codes.hpp"
#include "spc/common.hpp"
#include "spc/core.hpp"
#include "spc/decode.hpp"
#include "spc/rng.hpp"
#include "spc/threadpool.hpp"

namespace spc {

enum class PulsedMode { Unconstrained, Clip, ConstantEnergy };
enum class TemplateSource { Waveform, Irf };
enum class DecodeKind { Zncc, MatchedFilter };

inline const char* to_string(PulsedMode m) {
  switch (m) {
    case PulsedMode::Unconstrained: return "unconstrained";
    case PulsedMode::Clip: return "clip";
    default: return "constant";
  }
}

// Pulse baseline under a peak-power budget phi_max = p_factor * phi_sig.
//   Unconstrained: s = phi_sig * h.
//   Clip: s = min(phi_sig * h, phi_max); delivered photons drop below the
//         budget and that loss is what the baseline pays.
//   ConstantEnergy: widen a Gaussian pulse until its peak meets phi_max while
//         the total stays at phi_sig; errors if even sigma' = N/6 cannot.
inline Illumination pulsed_illumination(const Irf& irf, double phi_sig, double p_factor,
                                        PulsedMode mode) {
  if (!(p_factor > 0.0)) throw InvalidParameter("pulsed_illumination: p_factor must be > 0");
  if (!(phi_sig >= 0.0)) throw InvalidParameter("pulsed_illumination: phi_sig must be >= 0");
  const std::size_t n = irf.n();
  std::vector<double> s(irf.values);
  for (auto& v : s) v *= phi_sig;

  if (mode == PulsedMode::Unconstrained || std::isinf(p_factor))
    return Illumination::from_waveform(std::move(s), phi_sig, p_factor, irf.bin_size_ps);

  const double phi_max = p_factor * phi_sig;
  if (mode == PulsedMode::Clip) {
    for (auto& v : s) v = std::min(v, phi_max);
    return Illumination::from_waveform(std::move(s), phi_sig, p_factor, irf.bin_size_ps);
  }

  // ConstantEnergy
  if (irf.kind != Irf::Kind::Gaussian)
    throw InvalidParameter(
        "pulsed_illumination: constant-energy widening requires a Gaussian IRF");
  const double peak0 = vec_max(s);
  if (peak0 <= phi_max)
    return Illumination::from_waveform(std::move(s), phi_sig, p_factor, irf.bin_size_ps);
  const double sigma_hi = static_cast<double>(n) / 6.0;
  auto peak_at = [&](double sigma) {
    return phi_sig * vec_max(wrapped_gaussian(sigma, n));
  };
  if (peak_at(sigma_hi) > phi_max)
    throw InvalidParameter(
        "pulsed_illumination: constant-energy widening infeasible even at sigma=N/6");
  double lo = irf.sigma_bins, hi = sigma_hi;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (peak_at(mid) > phi_max)
      lo = mid;
    else
      hi = mid;
  }
  std::vector<double> widened = wrapped_gaussian(hi, n);
  for (auto& v : widened) v *= phi_sig;
  return Illumination::from_waveform(std::move(widened), phi_sig, p_factor, irf.bin_size_ps);
}

// One evaluated coding scheme: matrix + illumination + decode rule.
struct SchemeSpec {
  std::string label;
  CodingMatrix d;
  Illumination illum;
  TemplateSource template_source = TemplateSource::Waveform;
  DecodeKind decode = DecodeKind::Zncc;
};

struct SweepConfig {
  std::vector<SchemeSpec> schemes;
  std::vector<double> phi_grid;
  std::vector<double> sbr_grid;
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  Irf irf;
  double outlier_frac = 0.03;  // errors above this fraction of N count as outliers
  std::size_t threads = 1;
};

struct CellStats {
  std::string scheme;
  double phi = 0, sbr = 0;
  double mae_bins = 0, rmse_bins = 0;
  double outlier_rate = 0;
  std::size_t trials = 0;
};

struct SweepResult {
  std::vector<CellStats> cells;
  std::size_t n = 0;
};

namespace detail {

struct PreparedScheme {
  const SchemeSpec* spec;
  std::vector<double> shape;       // normalized emitted waveform
  double delivered_frac = 1.0;     // delivered photons / nominal budget
  DecodeTemplate tmpl;             // for ZNCC decode
};

inline PreparedScheme prepare_scheme(const SchemeSpec& s, const Irf& irf) {
  PreparedScheme p;
  p.spec = &s;
  p.shape = s.illum.shape();
  const double nominal = s.illum.phi_sig;
  p.delivered_frac = nominal > 0.0 ? s.illum.delivered_photons() / nominal : 1.0;
  const std::vector<double>& tshape =
      s.template_source == TemplateSource::Waveform ? p.shape : irf.values;
  if (s.decode == DecodeKind::Zncc) p.tmpl = correlate_with_waveform(s.d, tshape);
  return p;
}

}  // namespace detail

// Runs trials per (scheme, phi, sbr) cell: draw a depth uniform over [0, N),
// build the incident waveform with the scheme's delivered photons, Poisson
// sample, encode, decode, accumulate circular errors. Ambiguous decodes count
// as outliers with error N/2; a sweep never aborts on them.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  require(cfg.trials >= 1, "run_sweep: trials must be >= 1");
  require(!cfg.schemes.empty(), "run_sweep: no schemes");
  const std::size_t n = cfg.irf.n();
  require(n > 0, "run_sweep: irf is empty");
  for (const auto& s : cfg.schemes) {
    if (s.d.n != n || s.illum.s.size() != n)
      throw DimensionMismatch("run_sweep: scheme '" + s.label + "' does not match irf length");
  }

  std::vector<detail::PreparedScheme> prepared;
  prepared.reserve(cfg.schemes.size());
  for (const auto& s : cfg.schemes) prepared.push_back(detail::prepare_scheme(s, cfg.irf));

  const std::size_t n_phi = cfg.phi_grid.size(), n_sbr = cfg.sbr_grid.size();
  const std::size_t n_cells = cfg.schemes.size() * n_phi * n_sbr;
  SweepResult result;
  result.n = n;
  result.cells.resize(n_cells);

  parallel_for(n_cells, cfg.threads, [&](std::size_t cell) {
    const std::size_t si = cell / (n_phi * n_sbr);
    const std::size_t pi = (cell / n_sbr) % n_phi;
    const std::size_t bi = cell % n_sbr;
    const detail::PreparedScheme& ps = prepared[si];
    const double phi = cfg.phi_grid[pi];
    const double sbr = cfg.sbr_grid[bi];
    const double signal = ps.delivered_frac * phi;
    const double bkg = phi / sbr;
    const std::uint64_t grid_key = pi * n_sbr + bi;  // scheme-independent

    double abs_sum = 0, sq_sum = 0;
    std::size_t outliers = 0;
    const double outlier_limit = cfg.outlier_frac * static_cast<double>(n);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      Rng depth_rng = Rng::stream(cfg.seed, grid_key, t, 0);
      const double depth = depth_rng.uniform(0.0, static_cast<double>(n));
      std::vector<double> r = incident_from(ps.shape, signal, bkg, depth);
      Rng noise_rng = Rng::stream(cfg.seed, grid_key, t, 1);
      Histogram m = sample_histogram(r, 1000, SampleMode::Poisson, noise_rng,
                                     cfg.irf.bin_size_ps);
      double decoded;
      bool ambiguous = false;
      try {
        if (ps.spec->decode == DecodeKind::MatchedFilter)
          decoded = matched_filter_decode(ps.shape, m);
        else
          decoded = zncc_decode(ps.tmpl, encode(ps.spec->d, m));
      } catch (const AmbiguousDecode&) {
        ambiguous = true;
        decoded = 0;
      }
      const double err = ambiguous ? static_cast<double>(n) / 2.0
                                   : circular_error(decoded, depth, static_cast<double>(n));
      abs_sum += err;
      sq_sum += err * err;
      if (err > outlier_limit) ++outliers;
    }
    CellStats& out = result.cells[cell];
    out.scheme = ps.spec->label;
    out.phi = phi;
    out.sbr = sbr;
    out.trials = cfg.trials;
    out.mae_bins = abs_sum / static_cast<double>(cfg.trials);
    out.rmse_bins = std::sqrt(sq_sum / static_cast<double>(cfg.trials));
    out.outlier_rate = static_cast<double>(outliers) / static_cast<double>(cfg.trials);
  });
  return result;
}

// Stable column order; optional dt_ps adds distance columns (bin * dt * c/2).
inline std::string summarize_csv(const SweepResult& r, double dt_ps = 0.0) {
  const bool dist = dt_ps > 0.0;
  std::string out = "scheme,phi,sbr,mae_bins,rmse_bins,outlier_rate,trials";
  if (dist) out += ",mae_m,rmse_m";
  out += "\n";
  const double bin_to_m = dt_ps * 1e-12 * 299792458.0 / 2.0;
  for (const auto& c : r.cells) {
    out += c.scheme + "," + fmt_double(c.phi) + "," + fmt_double(c.sbr) + "," +
           fmt_double(c.mae_bins) + "," + fmt_double(c.rmse_bins) + "," +
           fmt_double(c.outlier_rate) + "," + fmt_size(c.trials);
    if (dist)
      out += "," + fmt_double(c.mae_bins * bin_to_m) + "," + fmt_double(c.rmse_bins * bin_to_m);
    out += "\n";
  }
  return out;
}

inline const CellStats& find_cell(const SweepResult& r, const std::string& scheme, double phi,
                                  double sbr) {
  for (const auto& c : r.cells)
    if (c.scheme == scheme && c.phi == phi && c.sbr == sbr) return c;
  throw InvalidParameter("find_cell: no cell for scheme '" + scheme + "'");
}

}  // namespace spc
