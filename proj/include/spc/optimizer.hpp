#pragma once
// Joint gradient-descent optimization of the illumination drive f and coding
// matrix D under peak-power and bandwidth constraints.
//
// Pipeline per sample: f -> clamp at [0, phi_max] -> circular convolve with h
// -> normalize to a unit-sum shape -> shift to the sampled depth and scale to
// (phi, sbr) -> reparameterized mean-equals-variance Gaussian noise -> encode
// with D -> ZNCC scores against the noiseless template built from the current
// (D, shape) -> softargmax -> circular L1 depth loss. The template is rebuilt
// from the live parameters every batch so gradients flow through both the
// coded values and the template. Adam updates both parameter blocks; f is
// projected back to [0, phi_max] after every step, so the peak constraint
// holds at every iterate.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spc/codes.hpp"
#include "spc/common.hpp"
#include "spc/core.hpp"
#include "spc/decode.hpp"
#include "spc/io.hpp"
#include "spc/rng.hpp"
#include "spc/tape.hpp"

namespace spc {

enum class NoiseMode { GaussianMeanVar, None };
enum class DInit { Fourier, Random };
enum class EnergyMode { Clip, ConstantEnergy };

inline const char* to_string(NoiseMode m) {
  return m == NoiseMode::GaussianMeanVar ? "gauss" : "none";
}
inline const char* to_string(DInit m) { return m == DInit::Fourier ? "fourier" : "random"; }
inline const char* to_string(EnergyMode m) {
  return m == EnergyMode::Clip ? "clip" : "constant";
}

struct OptConfig {
  std::size_t n = 1024;
  std::size_t k = 8;
  Irf irf;
  double p_factor = kInf;
  double phi_sig_train = 1000.0;
  std::vector<double> sbr_train_set = {0.5, 1.0, 5.0};
  double phi_train_lo = 100.0;   // per-sample photon count, log-uniform window
  double phi_train_hi = 1000.0;
  std::size_t depth_samples_per_batch = 64;  // J
  std::size_t batches_per_epoch = 16;
  double lr = 0.0;        // 0 = auto: 0.013 bandwidth-limited, 0.0018 peak-limited
  double lr_decay = 0.35;  // multiplicative, applied at E/3 and 2E/3
  std::size_t epochs = 20;
  double tv_weight = 1e-3;
  double beta_softargmax = 0.0;  // 0 = auto: 10 * sqrt(k)
  NoiseMode noise_mode = NoiseMode::GaussianMeanVar;
  std::uint64_t seed = 1;
  EnergyMode energy_mode = EnergyMode::Clip;  // pulsed-baseline comparisons only
  DInit d_init = DInit::Fourier;
  double init_jitter = 1e-2;

  bool finite_peak() const { return !std::isinf(p_factor); }
  double phi_max() const { return finite_peak() ? p_factor * phi_sig_train : kInf; }
  double effective_lr() const { return lr > 0.0 ? lr : (finite_peak() ? 0.0018 : 0.013); }
  double effective_beta() const {
    return beta_softargmax > 0.0 ? beta_softargmax : 10.0 * std::sqrt(static_cast<double>(k));
  }

  void validate() const {
    require(n >= 8, "OptConfig: n must be >= 8");
    require(k >= 2 && k <= n, "OptConfig: need 2 <= k <= n");
    require(irf.n() == n, "OptConfig: irf length must equal n");
    require(p_factor > 0.0, "OptConfig: p_factor must be positive");
    require(phi_sig_train > 0.0, "OptConfig: phi_sig_train must be positive");
    require(!sbr_train_set.empty(), "OptConfig: sbr_train_set must be non-empty");
    require(phi_train_lo > 0.0 && phi_train_hi >= phi_train_lo,
            "OptConfig: bad phi training window");
    require(depth_samples_per_batch >= 1, "OptConfig: depth_samples_per_batch must be >= 1");
    require(batches_per_epoch >= 1, "OptConfig: batches_per_epoch must be >= 1");
    require(lr >= 0.0, "OptConfig: lr must be >= 0");
    require(lr_decay > 0.0 && lr_decay <= 1.0, "OptConfig: lr_decay must be in (0, 1]");
    require(epochs >= 1, "OptConfig: epochs must be >= 1");
    require(tv_weight >= 0.0, "OptConfig: tv_weight must be >= 0");
  }
};

struct OptimizedBundle {
  std::vector<double> f;
  std::vector<double> s;
  CodingMatrix d;
  OptConfig config;
  std::vector<double> loss_trace;       // per-epoch mean training loss
  std::vector<double> loss_trace_best;  // running minimum of the above

  Illumination illumination() const {
    return Illumination::from_drive(f, config.irf, config.phi_sig_train, config.p_factor);
  }
};

class TrainDivergence : public Error {
 public:
  TrainDivergence(const std::string& what, OptimizedBundle checkpoint)
      : Error(what), checkpoint_(std::move(checkpoint)) {}
  const OptimizedBundle& checkpoint() const { return checkpoint_; }

 private:
  OptimizedBundle checkpoint_;
};

// Total variation of the matrix rows (non-circular).
inline double tv_penalty(const CodingMatrix& d) {
  double acc = 0;
  for (std::size_t r = 0; r < d.k; ++r)
    for (std::size_t i = 0; i + 1 < d.n; ++i)
      acc += std::fabs(d.at(r, i + 1) - d.at(r, i));
  return acc;
}

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

// Standard Adam update with bias correction. Deterministic; throws on
// non-finite gradients naming the parameter block.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8, const char* block_name = "params") {
  if (params.size() != grads.size())
    throw DimensionMismatch("adam_step: params/grads size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw Error(std::string("adam_step: non-finite gradient in block '") + block_name +
                  "' at index " + fmt_size(i));
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

namespace detail {

struct SampleNodes {
  ad::Tape::NodeId loss;
  ad::Tape::NodeId pred;
};

// Appends one training sample to the tape. `shape` is the shared normalized
// waveform node, `dprime` the shared template node, `dnode` the matrix leaf.
inline SampleNodes append_sample(ad::Tape& tape, ad::Tape::NodeId shape, ad::Tape::NodeId dnode,
                                 ad::Tape::NodeId dprime, double depth, double phi, double sbr,
                                 const std::vector<double>* eps, const OptConfig& cfg) {
  const double bkg_per_bin = phi / sbr / static_cast<double>(cfg.n);
  ad::Tape::NodeId r = tape.shift_scale(shape, depth, phi, bkg_per_bin);
  ad::Tape::NodeId m = eps ? tape.gauss_noise(r, *eps) : r;
  ad::Tape::NodeId b = tape.matvec(dnode, m);
  ad::Tape::NodeId scores = tape.zncc_scores(dprime, b);
  ad::Tape::NodeId pred = tape.softargmax(scores, cfg.effective_beta());
  ad::Tape::NodeId loss = tape.circ_l1(pred, depth, static_cast<double>(cfg.n));
  return {loss, pred};
}

struct SharedNodes {
  ad::Tape::NodeId f_leaf, d_leaf, shape, dprime;
};

inline SharedNodes append_shared(ad::Tape& tape, const std::vector<double>& f,
                                 const CodingMatrix& d, const OptConfig& cfg) {
  SharedNodes s;
  s.f_leaf = tape.leaf(ad::Tensor::vector(f), "illumination-drive");
  s.d_leaf = tape.leaf(ad::Tensor::matrix(d.k, d.n, d.rows), "coding-matrix");
  ad::Tape::NodeId fc = tape.clamp(s.f_leaf, 0.0, cfg.phi_max());
  ad::Tape::NodeId sv = tape.circ_conv(fc, cfg.irf.values);
  s.shape = tape.normalize_sum(sv);
  s.dprime = tape.row_correlate(s.d_leaf, s.shape);
  return s;
}

}  // namespace detail

struct PipelineResult {
  double loss = 0.0;
  double predicted_depth = 0.0;
  std::vector<double> grad_f;
  std::vector<double> grad_d;
};

// Single-sample forward pass (and gradients) through the full pipeline.
// noise_eps must hold N pre-drawn standard normals when the config noise mode
// is GaussianMeanVar; it is ignored in None mode. The returned loss is the
// circular L1 depth error only (TV regularization is part of the batch
// objective, not the per-sample loss).
inline PipelineResult forward_pipeline(const std::vector<double>& f, const CodingMatrix& d,
                                       double depth_bin, double phi_sig, double sbr,
                                       const std::vector<double>& noise_eps,
                                       const OptConfig& cfg, bool with_grad = true) {
  if (f.size() != cfg.n || d.n != cfg.n || d.k != cfg.k)
    throw DimensionMismatch("forward_pipeline: parameter shapes do not match config");
  if (!(sbr > 0.0)) throw InvalidParameter("forward_pipeline: sbr must be positive");
  const bool noisy = cfg.noise_mode == NoiseMode::GaussianMeanVar;
  if (noisy && noise_eps.size() != cfg.n)
    throw DimensionMismatch("forward_pipeline: noise_eps must have length n");
  ad::Tape tape;
  auto shared = detail::append_shared(tape, f, d, cfg);
  auto sample = detail::append_sample(tape, shared.shape, shared.d_leaf, shared.dprime,
                                      depth_bin, phi_sig, sbr, noisy ? &noise_eps : nullptr,
                                      cfg);
  PipelineResult out;
  out.loss = tape.value(sample.loss).scalar_value();
  out.predicted_depth = tape.value(sample.pred).scalar_value();
  if (with_grad) {
    tape.backward(sample.loss);
    out.grad_f = tape.grad(shared.f_leaf).v;
    out.grad_d = tape.grad(shared.d_leaf).v;
  }
  return out;
}

// Constraint audit for a trained (or hand-built) bundle.
struct ConstraintReport {
  double max_peak_violation = 0.0;   // max_i f_i - phi_max (0 when satisfied)
  double max_negativity = 0.0;       // max_i -f_i
  double waveform_mismatch = 0.0;    // || s - f (*) h ||_inf
  bool ok() const {
    return max_peak_violation <= 0.0 && max_negativity <= 0.0 && waveform_mismatch < 1e-9;
  }
};

inline ConstraintReport check_constraints(const OptimizedBundle& bundle) {
  ConstraintReport rep;
  const double pm = bundle.config.phi_max();
  for (double v : bundle.f) {
    if (!std::isinf(pm)) rep.max_peak_violation = std::max(rep.max_peak_violation, v - pm);
    rep.max_negativity = std::max(rep.max_negativity, -v);
  }
  std::vector<double> s = circular_convolve(bundle.f, bundle.config.irf.values);
  for (std::size_t i = 0; i < s.size(); ++i)
    rep.waveform_mismatch = std::max(rep.waveform_mismatch, std::fabs(s[i] - bundle.s[i]));
  return rep;
}

inline CodingMatrix initial_matrix(const OptConfig& cfg, Rng& rng) {
  CodingMatrix d;
  if (cfg.d_init == DInit::Fourier && cfg.k % 2 == 0 && cfg.k >= 2) {
    d = truncated_fourier(cfg.k, cfg.n);
  } else {
    d.k = cfg.k;
    d.n = cfg.n;
    d.rows.assign(cfg.k * cfg.n, 0.0);
    for (auto& v : d.rows) v = 0.1 * rng.normal();
  }
  for (auto& v : d.rows) v += cfg.init_jitter * rng.normal();
  d.label = "optimized";
  return d;
}

// Trains (f, D) by projected Adam. The drive starts at 1.0 plus a small
// seeded jitter; an exactly constant start is a stationary saddle under
// circular convolution (the emitted shape would be uniform and every ZNCC
// template column identical), so the jitter is what lets gradients flow on
// the first step.
inline OptimizedBundle train(const OptConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.n;
  const double phi_max = cfg.phi_max();
  Rng init_rng = Rng::stream(cfg.seed, 0xA11C, 0, 0);

  std::vector<double> f(N, 1.0);
  for (auto& v : f) v += cfg.init_jitter * init_rng.uniform01();
  if (!std::isinf(phi_max))
    for (auto& v : f) v = std::min(v, phi_max);
  CodingMatrix d = initial_matrix(cfg, init_rng);

  OptimizedBundle checkpoint;
  auto make_bundle = [&](const std::vector<double>& fv, const CodingMatrix& dv,
                         std::vector<double> trace, std::vector<double> best) {
    OptimizedBundle b;
    b.f = fv;
    b.s = circular_convolve(fv, cfg.irf.values);
    b.d = dv;
    b.d.label = "optimized";
    b.config = cfg;
    b.loss_trace = std::move(trace);
    b.loss_trace_best = std::move(best);
    return b;
  };
  std::vector<double> trace, trace_best;
  checkpoint = make_bundle(f, d, trace, trace_best);

  AdamState state_f, state_d;
  const std::size_t e1 = cfg.epochs / 3, e2 = 2 * cfg.epochs / 3;
  const bool noisy = cfg.noise_mode == NoiseMode::GaussianMeanVar;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.effective_lr();
    if (e1 > 0 && epoch >= e1) lr *= cfg.lr_decay;
    if (e2 > 0 && epoch >= e2) lr *= cfg.lr_decay;

    double epoch_loss = 0.0;
    for (std::size_t batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      Rng rng = Rng::stream(cfg.seed, 1 + epoch, batch, 0);
      ad::Tape tape;
      auto shared = detail::append_shared(tape, f, d, cfg);
      std::vector<ad::Tape::NodeId> terms;
      std::vector<double> weights;
      terms.reserve(cfg.depth_samples_per_batch + 1);
      const double wj = 1.0 / static_cast<double>(cfg.depth_samples_per_batch);
      std::vector<double> eps(N);
      for (std::size_t j = 0; j < cfg.depth_samples_per_batch; ++j) {
        const double depth = rng.uniform(0.0, static_cast<double>(N));
        const double phi = std::exp(
            rng.uniform(std::log(cfg.phi_train_lo), std::log(cfg.phi_train_hi)));
        const double sbr = cfg.sbr_train_set[rng.below(cfg.sbr_train_set.size())];
        const std::vector<double>* ep = nullptr;
        if (noisy) {
          for (auto& e : eps) e = rng.normal();
          ep = &eps;
        }
        auto sample = detail::append_sample(tape, shared.shape, shared.d_leaf, shared.dprime,
                                            depth, phi, sbr, ep, cfg);
        terms.push_back(sample.loss);
        weights.push_back(wj);
      }
      if (cfg.tv_weight > 0.0) {
        terms.push_back(tape.tv_rows(shared.d_leaf));
        weights.push_back(cfg.tv_weight);
      }
      ad::Tape::NodeId loss = tape.weighted_sum(terms, weights);
      const double loss_value = tape.value(loss).scalar_value();
      if (!std::isfinite(loss_value))
        throw TrainDivergence("train: loss diverged (non-finite) at epoch " + fmt_size(epoch),
                              checkpoint);
      tape.backward(loss);
      try {
        adam_step(f, tape.grad(shared.f_leaf).v, state_f, lr, 0.9, 0.999, 1e-8,
                  "illumination-drive");
        adam_step(d.rows, tape.grad(shared.d_leaf).v, state_d, lr, 0.9, 0.999, 1e-8,
                  "coding-matrix");
      } catch (const Error& e) {
        throw TrainDivergence(std::string("train: ") + e.what(), checkpoint);
      }
      // Projection: the feasible box for the drive is [0, phi_max].
      for (auto& v : f) {
        if (v < 0.0) v = 0.0;
        if (!std::isinf(phi_max) && v > phi_max) v = phi_max;
      }
      epoch_loss += loss_value;
    }
    epoch_loss /= static_cast<double>(cfg.batches_per_epoch);
    trace.push_back(epoch_loss);
    trace_best.push_back(trace_best.empty() ? epoch_loss
                                            : std::min(trace_best.back(), epoch_loss));
    checkpoint = make_bundle(f, d, trace, trace_best);
  }
  return checkpoint;
}

// ---- bundle directory I/O -------------------------------------------------

inline void save_bundle(const OptimizedBundle& b, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto p = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  save_matrix(b.d, p("codes.spcm"));
  save_waveform(b.f, b.config.irf.bin_size_ps, p("drive.spcv"));
  save_waveform(b.s, b.config.irf.bin_size_ps, p("waveform.spcv"));
  save_waveform(b.config.irf.values, b.config.irf.bin_size_ps, p("irf.spcv"));
  std::string sbrs;
  for (std::size_t i = 0; i < b.config.sbr_train_set.size(); ++i)
    sbrs += (i ? "," : "") + fmt_double(b.config.sbr_train_set[i]);
  std::vector<std::pair<std::string, std::string>> kv = {
      {"format", "spc-bundle-1"},
      {"n", fmt_size(b.config.n)},
      {"k", fmt_size(b.config.k)},
      {"p_factor", fmt_double(b.config.p_factor)},
      {"phi_sig", fmt_double(b.config.phi_sig_train)},
      {"sbr_train_set", sbrs},
      {"phi_train_lo", fmt_double(b.config.phi_train_lo)},
      {"phi_train_hi", fmt_double(b.config.phi_train_hi)},
      {"depth_samples_per_batch", fmt_size(b.config.depth_samples_per_batch)},
      {"batches_per_epoch", fmt_size(b.config.batches_per_epoch)},
      {"lr", fmt_double(b.config.effective_lr())},
      {"lr_decay", fmt_double(b.config.lr_decay)},
      {"epochs", fmt_size(b.config.epochs)},
      {"tv_weight", fmt_double(b.config.tv_weight)},
      {"beta_softargmax", fmt_double(b.config.effective_beta())},
      {"noise_mode", to_string(b.config.noise_mode)},
      {"seed", fmt_size(b.config.seed)},
      {"energy_mode", to_string(b.config.energy_mode)},
      {"d_init", to_string(b.config.d_init)},
      {"init_jitter", fmt_double(b.config.init_jitter)},
      {"irf_kind", b.config.irf.kind == Irf::Kind::Gaussian ? "gaussian" : "tabulated"},
      {"irf_sigma_bins", fmt_double(b.config.irf.sigma_bins)},
      {"bin_size_ps", fmt_double(b.config.irf.bin_size_ps)},
  };
  save_keyvalues(kv, p("meta.txt"));
  std::string csv = "epoch,loss,best\n";
  for (std::size_t i = 0; i < b.loss_trace.size(); ++i)
    csv += fmt_size(i) + "," + fmt_double(b.loss_trace[i]) + "," +
           fmt_double(b.loss_trace_best[i]) + "\n";
  detail::write_file(p("loss.csv"), csv);
}

inline OptimizedBundle load_bundle(const std::string& dir) {
  const auto p = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  auto kvs = load_keyvalues(p("meta.txt"));
  auto get = [&](const std::string& key) -> std::string {
    for (const auto& [k, v] : kvs)
      if (k == key) return v;
    throw IoError(p("meta.txt") + ": missing key '" + key + "'");
  };
  OptimizedBundle b;
  b.config.n = static_cast<std::size_t>(parse_double(get("n"), "n"));
  b.config.k = static_cast<std::size_t>(parse_double(get("k"), "k"));
  b.config.p_factor = parse_double(get("p_factor"), "p_factor");
  b.config.phi_sig_train = parse_double(get("phi_sig"), "phi_sig");
  b.config.sbr_train_set.clear();
  {
    std::string s = get("sbr_train_set");
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      if (comma > pos)
        b.config.sbr_train_set.push_back(parse_double(s.substr(pos, comma - pos), "sbr"));
      pos = comma + 1;
    }
  }
  b.config.phi_train_lo = parse_double(get("phi_train_lo"), "phi_train_lo");
  b.config.phi_train_hi = parse_double(get("phi_train_hi"), "phi_train_hi");
  b.config.depth_samples_per_batch =
      static_cast<std::size_t>(parse_double(get("depth_samples_per_batch"), "J"));
  b.config.batches_per_epoch =
      static_cast<std::size_t>(parse_double(get("batches_per_epoch"), "batches"));
  b.config.lr = parse_double(get("lr"), "lr");
  b.config.lr_decay = parse_double(get("lr_decay"), "lr_decay");
  b.config.epochs = static_cast<std::size_t>(parse_double(get("epochs"), "epochs"));
  b.config.tv_weight = parse_double(get("tv_weight"), "tv_weight");
  b.config.beta_softargmax = parse_double(get("beta_softargmax"), "beta");
  b.config.noise_mode =
      get("noise_mode") == std::string("gauss") ? NoiseMode::GaussianMeanVar : NoiseMode::None;
  b.config.seed = static_cast<std::uint64_t>(parse_double(get("seed"), "seed"));
  b.config.energy_mode =
      get("energy_mode") == std::string("clip") ? EnergyMode::Clip : EnergyMode::ConstantEnergy;
  b.config.d_init = get("d_init") == std::string("fourier") ? DInit::Fourier : DInit::Random;
  b.config.init_jitter = parse_double(get("init_jitter"), "init_jitter");

  Waveform irf_w = load_waveform_binary(p("irf.spcv"));
  if (get("irf_kind") == std::string("gaussian")) {
    b.config.irf = make_tabulated_irf(irf_w.values, irf_w.bin_size_ps, "bundle irf");
    b.config.irf.kind = Irf::Kind::Gaussian;
    b.config.irf.sigma_bins = parse_double(get("irf_sigma_bins"), "sigma");
  } else {
    b.config.irf = make_tabulated_irf(irf_w.values, irf_w.bin_size_ps, "bundle irf");
  }
  b.f = load_waveform_binary(p("drive.spcv")).values;
  b.s = load_waveform_binary(p("waveform.spcv")).values;
  b.d = load_matrix(p("codes.spcm"));
  b.d.label = "optimized";
  if (b.f.size() != b.config.n || b.d.n != b.config.n || b.d.k != b.config.k)
    throw IoError(dir + ": bundle files disagree with meta.txt dimensions");
  std::ifstream loss_in(p("loss.csv"));
  if (loss_in) {
    std::string line;
    std::getline(loss_in, line);  // header
    while (std::getline(loss_in, line)) {
      if (line.empty()) continue;
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) continue;
      b.loss_trace.push_back(parse_double(line.substr(c1 + 1, c2 - c1 - 1), "loss"));
      b.loss_trace_best.push_back(parse_double(line.substr(c2 + 1), "best"));
    }
  }
  return b;
}

}  // namespace spc
