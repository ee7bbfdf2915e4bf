#pragma once
// Discrete signal types and the single-photon forward model: waveform
// synthesis, per-bin detection probabilities and stochastic histogram
// sampling. Everything is immutable after construction; operations are pure
// and safe to call concurrently. RNG state is always passed explicitly.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spc/common.hpp"
#include "spc/rng.hpp"
#include "spc/signal.hpp"

namespace spc {

// System impulse response h: non-negative, normalized to sum 1, circularly
// centered at bin 0.
struct Irf {
  enum class Kind { Gaussian, Tabulated };

  std::vector<double> values;
  double bin_size_ps = 1.0;
  Kind kind = Kind::Tabulated;
  double sigma_bins = 0.0;  // meaningful for Kind::Gaussian only
  std::string source_label;

  std::size_t n() const { return values.size(); }
};

// Wrapped Gaussian evaluated on bins 0..n-1, centered at bin 0. Tails are
// folded back around the period (a few wraps is plenty for sigma <= n/6).
inline std::vector<double> wrapped_gaussian(double sigma_bins, std::size_t n) {
  std::vector<double> g(n, 0.0);
  const double inv2s2 = 1.0 / (2.0 * sigma_bins * sigma_bins);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int w = -4; w <= 4; ++w) {
      const double t = static_cast<double>(i) + static_cast<double>(w) * static_cast<double>(n);
      const double e = -t * t * inv2s2;
      if (e > -700.0) acc += std::exp(e);
    }
    g[i] = acc;
  }
  const double s = vec_sum(g);
  for (auto& x : g) x /= s;
  return g;
}

inline Irf make_gaussian_irf(double sigma_bins, std::size_t n, double bin_size_ps = 1.0) {
  if (!(sigma_bins > 0.0))
    throw InvalidParameter("make_gaussian_irf: sigma_bins must be positive");
  if (n < 8) throw InvalidParameter("make_gaussian_irf: n must be at least 8");
  Irf irf;
  irf.values = wrapped_gaussian(sigma_bins, n);
  irf.bin_size_ps = bin_size_ps;
  irf.kind = Irf::Kind::Gaussian;
  irf.sigma_bins = sigma_bins;
  irf.source_label = "gaussian sigma=" + fmt_double(sigma_bins);
  return irf;
}

inline Irf make_tabulated_irf(std::vector<double> values, double bin_size_ps,
                              std::string source_label) {
  if (values.empty()) throw InvalidParameter("tabulated irf: empty");
  double s = 0;
  for (double v : values) {
    if (!(v >= 0.0)) throw InvalidParameter("tabulated irf: negative value");
    s += v;
  }
  if (!(s > 0.0)) throw InvalidParameter("tabulated irf: all-zero");
  for (auto& v : values) v /= s;
  Irf irf;
  irf.values = std::move(values);
  irf.bin_size_ps = bin_size_ps;
  irf.kind = Irf::Kind::Tabulated;
  irf.source_label = std::move(source_label);
  return irf;
}

// An IRF that passes the drive through unchanged. Used for baseline
// illuminations whose waveform is specified directly.
inline Irf make_delta_irf(std::size_t n, double bin_size_ps = 1.0) {
  Irf irf;
  irf.values.assign(n, 0.0);
  irf.values[0] = 1.0;
  irf.bin_size_ps = bin_size_ps;
  irf.kind = Irf::Kind::Tabulated;
  irf.source_label = "delta";
  return irf;
}

// out_i = min(max(f_i, 0), phi_max)
inline std::vector<double> clamp_peak(const std::vector<double>& f, double phi_max) {
  if (!(phi_max > 0.0)) throw InvalidParameter("clamp_peak: phi_max must be positive");
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v = f[i] < 0.0 ? 0.0 : f[i];
    out[i] = v > phi_max ? phi_max : v;
  }
  return out;
}

// Source illumination: drive f (photons/bin), emitted waveform s = f (*) h,
// photon budget phi_sig and peak bound phi_max = p_factor * phi_sig.
struct Illumination {
  std::vector<double> f;
  std::vector<double> s;
  double phi_sig = 0.0;
  double p_factor = kInf;
  double phi_max = kInf;
  Irf irf;  // the response s was produced with; kept so s can be recomputed

  static Illumination from_drive(std::vector<double> drive, const Irf& irf, double phi_sig,
                                 double p_factor) {
    if (drive.size() != irf.n())
      throw DimensionMismatch("Illumination: drive length does not match irf");
    if (!(phi_sig >= 0.0)) throw InvalidParameter("Illumination: phi_sig must be >= 0");
    if (!(p_factor > 0.0)) throw InvalidParameter("Illumination: p_factor must be positive");
    Illumination il;
    il.phi_sig = phi_sig;
    il.p_factor = p_factor;
    il.phi_max = std::isinf(p_factor) ? kInf : p_factor * phi_sig;
    for (double v : drive)
      if (!(v >= 0.0) || v > il.phi_max)
        throw InvalidParameter("Illumination: drive violates [0, phi_max]");
    il.s = circular_convolve(drive, irf.values);
    il.f = std::move(drive);
    il.irf = irf;
    return il;
  }

  // Waveform given directly (pulse baselines): the drive equals the waveform
  // and the stored response is a delta, so s = f (*) h still holds.
  static Illumination from_waveform(std::vector<double> waveform, double phi_sig,
                                    double p_factor, double bin_size_ps = 1.0) {
    Illumination il;
    il.phi_sig = phi_sig;
    il.p_factor = p_factor;
    il.phi_max = std::isinf(p_factor) ? kInf : p_factor * phi_sig;
    il.irf = make_delta_irf(waveform.size(), bin_size_ps);
    il.f = waveform;
    il.s = std::move(waveform);
    return il;
  }

  // Normalized waveform shape (sum 1); errors on an all-zero waveform.
  std::vector<double> shape() const {
    const double sum = vec_sum(s);
    if (!(sum > 0.0)) throw InvalidParameter("Illumination: waveform sums to zero");
    std::vector<double> out(s);
    for (auto& v : out) v /= sum;
    return out;
  }

  // Photons this source can put on the scene per acquisition, capped at the
  // budget: the drive may be rescaled by at most phi_max/max(f) before the
  // peak bound binds, so the deliverable total is min(phi_sig, sum(f) *
  // phi_max / max(f)). Infinite peak power always delivers the full budget.
  double delivered_photons() const {
    if (std::isinf(phi_max)) return phi_sig;
    const double fmax = vec_max(f);
    if (!(fmax > 0.0)) return 0.0;
    const double scale = phi_max / fmax;
    const double deliverable = vec_sum(f) * scale;
    return deliverable < phi_sig ? deliverable : phi_sig;
  }
};

// Single-point scene: true time-of-flight in (possibly fractional) bins,
// signal budget and background level.
struct SceneParams {
  double depth_bin = 0.0;
  double phi_sig = 0.0;
  double sbr = kInf;      // phi_sig / phi_bkg
  double phi_bkg = 0.0;   // total background photons over the period

  SceneParams() = default;

  SceneParams(double depth, double phi, double sbr_, std::size_t n) {
    if (!(sbr_ > 0.0)) throw InvalidParameter("SceneParams: sbr must be positive");
    if (!(phi >= 0.0)) throw InvalidParameter("SceneParams: phi_sig must be >= 0");
    depth_bin = wrap_depth(depth, n);
    phi_sig = phi;
    sbr = sbr_;
    phi_bkg = phi / sbr_;
  }

  static SceneParams with_background(double depth, double phi, double bkg, std::size_t n) {
    if (!(phi >= 0.0) || !(bkg >= 0.0))
      throw InvalidParameter("SceneParams: photon counts must be >= 0");
    SceneParams sp;
    sp.depth_bin = wrap_depth(depth, n);
    sp.phi_sig = phi;
    sp.phi_bkg = bkg;
    sp.sbr = bkg > 0.0 ? phi / bkg : kInf;
    return sp;
  }

  static double wrap_depth(double d, std::size_t n) {
    const double nn = static_cast<double>(n);
    double w = std::fmod(d, nn);
    if (w < 0.0) w += nn;
    return w;
  }
};

// r_i = signal * shift(shape, depth)_i + bkg / N, with shape summing to 1.
inline std::vector<double> incident_from(const std::vector<double>& shape, double signal_photons,
                                         double bkg_photons, double depth_bin) {
  const std::size_t n = shape.size();
  std::vector<double> r = shift_circular_linear(shape, depth_bin);
  const double floor_per_bin = bkg_photons / static_cast<double>(n);
  for (auto& v : r) v = signal_photons * v + floor_per_bin;
  return r;
}

// Mean incident photons per bin for one acquisition. The waveform is
// recomputed from the drive and the given IRF (never trusted from a cache),
// normalized to sum 1, shifted to the scene depth and scaled.
inline std::vector<double> incident_waveform(const Illumination& illum, const SceneParams& scene,
                                             const Irf& irf) {
  std::vector<double> s = circular_convolve(illum.f, irf.values);
  const double sum = vec_sum(s);
  if (!(sum > 0.0)) throw InvalidParameter("incident_waveform: waveform sums to zero");
  for (auto& v : s) v /= sum;
  return incident_from(s, scene.phi_sig, scene.phi_bkg, scene.depth_bin);
}

inline std::vector<double> incident_waveform(const Illumination& illum,
                                             const SceneParams& scene) {
  return incident_waveform(illum, scene, illum.irf);
}

// q_i = 1 - exp(-r_i)
inline std::vector<double> detection_prob(const std::vector<double>& r) {
  std::vector<double> q(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] >= 0.0)) throw InvalidParameter("detection_prob: negative mean at bin " +
                                               fmt_size(i));
    q[i] = -std::expm1(-r[i]);
  }
  return q;
}

// Photon-count histogram over L laser cycles.
struct Histogram {
  std::vector<std::int64_t> counts;
  std::int64_t cycles = 1;
  double bin_size_ps = 1.0;

  std::size_t n() const { return counts.size(); }
  std::vector<double> as_doubles() const {
    return std::vector<double>(counts.begin(), counts.end());
  }
};

enum class SampleMode { Binomial, Poisson };

// r is the total expected incident count per bin over the whole acquisition.
// Binomial mode: the per-cycle mean is r_i / L, so M_i ~ B(L, 1-exp(-r_i/L)).
// Poisson mode: M_i ~ Poisson(r_i); L is kept as metadata only.
inline Histogram sample_histogram(const std::vector<double>& r, std::int64_t cycles,
                                  SampleMode mode, Rng& rng, double bin_size_ps = 1.0) {
  if (cycles < 1) throw InvalidParameter("sample_histogram: cycles must be >= 1");
  Histogram h;
  h.cycles = cycles;
  h.bin_size_ps = bin_size_ps;
  h.counts.resize(r.size());
  if (mode == SampleMode::Poisson) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] >= 0.0)) throw InvalidParameter("sample_histogram: negative mean");
      h.counts[i] = rng.poisson(r[i]);
    }
    return h;
  }
  const double L = static_cast<double>(cycles);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] >= 0.0)) throw InvalidParameter("sample_histogram: negative mean");
    const double q = -std::expm1(-r[i] / L);
    h.counts[i] = rng.binomial(cycles, q);
  }
  return h;
}

inline Histogram sample_histogram(const std::vector<double>& r, std::int64_t cycles,
                                  SampleMode mode, std::uint64_t seed,
                                  double bin_size_ps = 1.0) {
  Rng rng(seed);
  return sample_histogram(r, cycles, mode, rng, bin_size_ps);
}

}  // namespace spc
