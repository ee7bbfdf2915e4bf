#pragma once
// Reverse-mode gradient tape over the fixed training pipeline.
//
// The pipeline is static (clamp -> convolve -> normalize -> shift/scale ->
// noise -> encode -> template correlate -> zncc scores -> softargmax ->
// circular L1, plus TV on the matrix), so instead of a general autodiff
// framework each node kind carries a hand-derived adjoint. Values are dense
// row-major tensors; vectors are 1 x n. Forward values are computed eagerly
// when a node is appended; backward() walks the node list in reverse.
//
// Subgradient conventions: clamp passes gradient only strictly inside
// (lo, hi); |.| and TV kinks use sign(0) = 0; the sqrt in the noise layer
// guards its derivative with max(r, 1e-6).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spc/common.hpp"
#include "spc/signal.hpp"

namespace spc::ad {

struct Tensor {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  static Tensor vector(std::vector<double> x) {
    Tensor t;
    t.rows = 1;
    t.cols = x.size();
    t.v = std::move(x);
    return t;
  }
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> x) {
    Tensor t;
    t.rows = r;
    t.cols = c;
    t.v = std::move(x);
    return t;
  }

  std::size_t size() const { return v.size(); }
  double scalar_value() const { return v[0]; }
};

class Tape {
 public:
  using NodeId = int;

  enum class Kind : std::uint8_t {
    Leaf,
    Clamp,         // p0=lo, p1=hi
    CircConv,      // aux = kernel (constant)
    NormalizeSum,  // p0 = saved sum
    ShiftScale,    // i0 = floor(depth), p0 = frac, p1 = signal, p2 = bkg_per_bin
    GaussNoise,    // aux = eps draw, p0 = derivative guard
    MatVec,        // a = matrix, b = vector
    RowCorrelate,  // a = matrix, b = shape vector
    ZnccScores,    // a = template matrix D', b = coded vector
    Softargmax,    // p0 = beta; aux = softmax weights
    CircL1,        // p0 = target, p1 = period
    TvRows,
    WeightedSum,   // scalars; aux = weights
  };

  NodeId leaf(Tensor value, std::string name) {
    Node nd;
    nd.kind = Kind::Leaf;
    nd.val = std::move(value);
    nd.name = std::move(name);
    return push(std::move(nd));
  }

  // out_i = min(max(x_i, lo), hi)
  NodeId clamp(NodeId x, double lo, double hi) {
    Node nd;
    nd.kind = Kind::Clamp;
    nd.a = x;
    nd.p0 = lo;
    nd.p1 = hi;
    nd.val = at(x).val;
    for (auto& v : nd.val.v) v = v < lo ? lo : (v > hi ? hi : v);
    return push(std::move(nd));
  }

  // out = x (*) kernel, kernel constant
  NodeId circ_conv(NodeId x, std::vector<double> kernel) {
    const Tensor& xa = at(x).val;
    if (xa.cols != kernel.size()) throw DimensionMismatch("tape circ_conv: length mismatch");
    Node nd;
    nd.kind = Kind::CircConv;
    nd.a = x;
    nd.val = Tensor::vector(circular_convolve(xa.v, kernel));
    nd.aux = std::move(kernel);
    return push(std::move(nd));
  }

  // out = x / sum(x)
  NodeId normalize_sum(NodeId x) {
    const Tensor& xa = at(x).val;
    const double s = vec_sum(xa.v);
    if (!(std::fabs(s) > 1e-300)) throw InvalidParameter("tape normalize_sum: zero sum");
    Node nd;
    nd.kind = Kind::NormalizeSum;
    nd.a = x;
    nd.p0 = s;
    nd.val = xa;
    for (auto& v : nd.val.v) v /= s;
    return push(std::move(nd));
  }

  // out_i = signal * [(1-w) shape_{(i-i0) mod N} + w shape_{(i-i0-1) mod N}] + bkg_per_bin
  NodeId shift_scale(NodeId shape, double depth, double signal, double bkg_per_bin) {
    const Tensor& xa = at(shape).val;
    const std::int64_t n = static_cast<std::int64_t>(xa.cols);
    const double df = std::floor(depth);
    std::int64_t i0 = static_cast<std::int64_t>(df) % n;
    if (i0 < 0) i0 += n;
    const double w = depth - df;
    Node nd;
    nd.kind = Kind::ShiftScale;
    nd.a = shape;
    nd.i0 = i0;
    nd.p0 = w;
    nd.p1 = signal;
    nd.p2 = bkg_per_bin;
    nd.val = Tensor(1, xa.cols);
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t a = (i - i0 + 2 * n) % n;
      const std::int64_t b = (a - 1 + n) % n;
      nd.val.v[static_cast<std::size_t>(i)] =
          signal * ((1.0 - w) * xa.v[static_cast<std::size_t>(a)] +
                    w * xa.v[static_cast<std::size_t>(b)]) +
          bkg_per_bin;
    }
    return push(std::move(nd));
  }

  // out = r + sqrt(max(r, 0)) . eps  (reparameterized mean-equals-variance noise)
  NodeId gauss_noise(NodeId r, std::vector<double> eps, double guard = 1e-6) {
    const Tensor& xa = at(r).val;
    if (xa.cols != eps.size()) throw DimensionMismatch("tape gauss_noise: eps length mismatch");
    Node nd;
    nd.kind = Kind::GaussNoise;
    nd.a = r;
    nd.p0 = guard;
    nd.val = xa;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double rv = xa.v[i] > 0.0 ? xa.v[i] : 0.0;
      nd.val.v[i] += std::sqrt(rv) * eps[i];
    }
    nd.aux = std::move(eps);
    return push(std::move(nd));
  }

  // out = M x
  NodeId matvec(NodeId m, NodeId x) {
    const Tensor& ma = at(m).val;
    const Tensor& xa = at(x).val;
    if (ma.cols != xa.cols || xa.rows != 1) throw DimensionMismatch("tape matvec: shape mismatch");
    Node nd;
    nd.kind = Kind::MatVec;
    nd.a = m;
    nd.b = x;
    nd.val = Tensor(1, ma.rows);
    for (std::size_t r = 0; r < ma.rows; ++r) {
      const double* row = ma.v.data() + r * ma.cols;
      double s = 0;
      for (std::size_t i = 0; i < ma.cols; ++i) s += row[i] * xa.v[i];
      nd.val.v[r] = s;
    }
    return push(std::move(nd));
  }

  // out_{k,i} = sum_j M_{k,j} shape_{(j-i) mod N}
  NodeId row_correlate(NodeId m, NodeId shape) {
    const Tensor& ma = at(m).val;
    const Tensor& sa = at(shape).val;
    if (ma.cols != sa.cols || sa.rows != 1)
      throw DimensionMismatch("tape row_correlate: shape mismatch");
    Node nd;
    nd.kind = Kind::RowCorrelate;
    nd.a = m;
    nd.b = shape;
    nd.val = Tensor(ma.rows, ma.cols);
    std::vector<double> row(ma.cols);
    for (std::size_t r = 0; r < ma.rows; ++r) {
      for (std::size_t i = 0; i < ma.cols; ++i) row[i] = ma.v[r * ma.cols + i];
      std::vector<double> corr = circular_correlate(row, sa.v);
      for (std::size_t i = 0; i < ma.cols; ++i) nd.val.v[r * ma.cols + i] = corr[i];
    }
    return push(std::move(nd));
  }

  // scores_i = znorm(column i of D') . znorm(b); degenerate columns score a
  // large negative constant and contribute no gradient.
  NodeId zncc_scores(NodeId dprime, NodeId b) {
    const Tensor& da = at(dprime).val;
    const Tensor& ba = at(b).val;
    const std::size_t K = da.rows, N = da.cols;
    if (ba.cols != K || ba.rows != 1) throw DimensionMismatch("tape zncc: coded length != K");
    Node nd;
    nd.kind = Kind::ZnccScores;
    nd.a = dprime;
    nd.b = b;
    nd.val = Tensor(1, N);
    // aux layout: [z columns (N*K, column-major) | column norms (N) | zb (K) | nb (1)]
    nd.aux.assign(N * K + N + K + 1, 0.0);
    double* zcols = nd.aux.data();
    double* norms = nd.aux.data() + N * K;
    double* zb = nd.aux.data() + N * K + N;
    double* nb = nd.aux.data() + N * K + N + K;

    double bmean = 0;
    for (std::size_t r = 0; r < K; ++r) bmean += ba.v[r];
    bmean /= static_cast<double>(K);
    double bnorm2 = 0;
    for (std::size_t r = 0; r < K; ++r) {
      zb[r] = ba.v[r] - bmean;
      bnorm2 += zb[r] * zb[r];
    }
    nb[0] = std::sqrt(bnorm2);
    const bool b_ok = nb[0] > kDegenerateTol;
    if (b_ok)
      for (std::size_t r = 0; r < K; ++r) zb[r] /= nb[0];

    for (std::size_t i = 0; i < N; ++i) {
      double mean = 0;
      for (std::size_t r = 0; r < K; ++r) mean += da.v[r * N + i];
      mean /= static_cast<double>(K);
      double norm2 = 0;
      for (std::size_t r = 0; r < K; ++r) {
        const double c = da.v[r * N + i] - mean;
        zcols[i * K + r] = c;
        norm2 += c * c;
      }
      const double norm = std::sqrt(norm2);
      norms[i] = norm;
      if (norm <= kDegenerateTol || !b_ok) {
        nd.val.v[i] = b_ok ? kDegenerateScore : 0.0;
        norms[i] = norm <= kDegenerateTol ? 0.0 : norms[i];
        if (!b_ok) norms[i] = 0.0;  // suppress gradient entirely
        continue;
      }
      double s = 0;
      for (std::size_t r = 0; r < K; ++r) {
        zcols[i * K + r] /= norm;
        s += zcols[i * K + r] * zb[r];
      }
      nd.val.v[i] = s;
    }
    if (!b_ok) nb[0] = 0.0;
    return push(std::move(nd));
  }

  // out = sum_i i * softmax(beta * scores)_i
  NodeId softargmax(NodeId scores, double beta) {
    const Tensor& sa = at(scores).val;
    Node nd;
    nd.kind = Kind::Softargmax;
    nd.a = scores;
    nd.p0 = beta;
    nd.aux.resize(sa.cols);
    double hi = -kInf;
    for (double v : sa.v) hi = v > hi ? v : hi;
    double z = 0;
    for (std::size_t i = 0; i < sa.cols; ++i) {
      nd.aux[i] = std::exp(beta * (sa.v[i] - hi));
      z += nd.aux[i];
    }
    double acc = 0;
    for (std::size_t i = 0; i < sa.cols; ++i) {
      nd.aux[i] /= z;
      acc += nd.aux[i] * static_cast<double>(i);
    }
    nd.val = Tensor::scalar(acc);
    return push(std::move(nd));
  }

  // out = min(|pred - target|, period - |pred - target|)
  NodeId circ_l1(NodeId pred, double target, double period) {
    const Tensor& pa = at(pred).val;
    Node nd;
    nd.kind = Kind::CircL1;
    nd.a = pred;
    nd.p0 = target;
    nd.p1 = period;
    double d = std::fabs(pa.scalar_value() - target);
    d = std::fmod(d, period);
    nd.val = Tensor::scalar(d <= period / 2.0 ? d : period - d);
    return push(std::move(nd));
  }

  // out = sum_k sum_i |M_{k,i+1} - M_{k,i}|  (non-circular, per row)
  NodeId tv_rows(NodeId m) {
    const Tensor& ma = at(m).val;
    Node nd;
    nd.kind = Kind::TvRows;
    nd.a = m;
    double acc = 0;
    for (std::size_t r = 0; r < ma.rows; ++r)
      for (std::size_t i = 0; i + 1 < ma.cols; ++i)
        acc += std::fabs(ma.v[r * ma.cols + i + 1] - ma.v[r * ma.cols + i]);
    nd.val = Tensor::scalar(acc);
    return push(std::move(nd));
  }

  // out = sum_j w_j * scalar_j
  NodeId weighted_sum(std::vector<NodeId> scalars, std::vector<double> weights) {
    if (scalars.size() != weights.size())
      throw DimensionMismatch("tape weighted_sum: weights size mismatch");
    Node nd;
    nd.kind = Kind::WeightedSum;
    nd.ins = std::move(scalars);
    double acc = 0;
    for (std::size_t j = 0; j < nd.ins.size(); ++j)
      acc += weights[j] * at(nd.ins[j]).val.scalar_value();
    nd.aux = std::move(weights);
    nd.val = Tensor::scalar(acc);
    return push(std::move(nd));
  }

  const Tensor& value(NodeId id) const { return at(id).val; }
  const Tensor& grad(NodeId id) const { return at(id).grad; }

  // Reverse sweep seeding d(output)/d(output) = 1.
  void backward(NodeId output) {
    for (auto& nd : nodes_) {
      nd.grad = Tensor(nd.val.rows, nd.val.cols);
    }
    nodes_[static_cast<std::size_t>(output)].grad.v[0] = 1.0;
    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
      Node& nd = nodes_[idx];
      switch (nd.kind) {
        case Kind::Leaf:
          break;
        case Kind::Clamp: {
          Node& x = at_mut(nd.a);
          for (std::size_t i = 0; i < x.val.size(); ++i)
            if (x.val.v[i] > nd.p0 && x.val.v[i] < nd.p1) x.grad.v[i] += nd.grad.v[i];
          break;
        }
        case Kind::CircConv: {
          // y = x (*) k  =>  gx = gy (corr) k
          Node& x = at_mut(nd.a);
          std::vector<double> gx = circular_correlate(nd.grad.v, nd.aux);
          for (std::size_t i = 0; i < gx.size(); ++i) x.grad.v[i] += gx[i];
          break;
        }
        case Kind::NormalizeSum: {
          // y = x/S: gx_j = (gy_j - <gy, y>) / S
          Node& x = at_mut(nd.a);
          const double inner = vec_dot(nd.grad.v, nd.val.v);
          for (std::size_t i = 0; i < x.val.size(); ++i)
            x.grad.v[i] += (nd.grad.v[i] - inner) / nd.p0;
          break;
        }
        case Kind::ShiftScale: {
          // gx_j = signal * [(1-w) gy_{(j+i0) mod N} + w gy_{(j+i0+1) mod N}]
          Node& x = at_mut(nd.a);
          const std::int64_t n = static_cast<std::int64_t>(x.val.cols);
          for (std::int64_t j = 0; j < n; ++j) {
            const std::int64_t a = (j + nd.i0) % n;
            const std::int64_t b = (a + 1) % n;
            x.grad.v[static_cast<std::size_t>(j)] +=
                nd.p1 * ((1.0 - nd.p0) * nd.grad.v[static_cast<std::size_t>(a)] +
                         nd.p0 * nd.grad.v[static_cast<std::size_t>(b)]);
          }
          break;
        }
        case Kind::GaussNoise: {
          // dy/dr = 1 + eps * 0.5 / sqrt(max(r, guard))
          Node& x = at_mut(nd.a);
          for (std::size_t i = 0; i < x.val.size(); ++i) {
            const double rg = x.val.v[i] > nd.p0 ? x.val.v[i] : nd.p0;
            x.grad.v[i] += nd.grad.v[i] * (1.0 + nd.aux[i] * 0.5 / std::sqrt(rg));
          }
          break;
        }
        case Kind::MatVec: {
          Node& m = at_mut(nd.a);
          Node& x = at_mut(nd.b);
          const std::size_t R = m.val.rows, C = m.val.cols;
          for (std::size_t r = 0; r < R; ++r) {
            const double g = nd.grad.v[r];
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < C; ++i) {
              m.grad.v[r * C + i] += g * x.val.v[i];
              x.grad.v[i] += g * m.val.v[r * C + i];
            }
          }
          break;
        }
        case Kind::RowCorrelate: {
          // gM row k = g row k (*) shape ;  gshape = sum_k corr(M_k, g_k)
          Node& m = at_mut(nd.a);
          Node& sh = at_mut(nd.b);
          const std::size_t R = m.val.rows, C = m.val.cols;
          std::vector<double> grow(C), mrow(C);
          for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t i = 0; i < C; ++i) {
              grow[i] = nd.grad.v[r * C + i];
              mrow[i] = m.val.v[r * C + i];
            }
            std::vector<double> gm = circular_convolve(grow, sh.val.v);
            std::vector<double> gs = circular_correlate(mrow, grow);
            for (std::size_t i = 0; i < C; ++i) {
              m.grad.v[r * C + i] += gm[i];
              sh.grad.v[i] += gs[i];
            }
          }
          break;
        }
        case Kind::ZnccScores: {
          backward_zncc(nd);
          break;
        }
        case Kind::Softargmax: {
          // dt/ds_j = beta * p_j * (j - t)
          Node& x = at_mut(nd.a);
          const double g = nd.grad.v[0];
          const double t = nd.val.scalar_value();
          for (std::size_t i = 0; i < x.val.cols; ++i)
            x.grad.v[i] += g * nd.p0 * nd.aux[i] * (static_cast<double>(i) - t);
          break;
        }
        case Kind::CircL1: {
          Node& x = at_mut(nd.a);
          const double delta = x.val.scalar_value() - nd.p0;
          const double ad = std::fabs(std::fmod(std::fabs(delta), nd.p1));
          double s = delta > 0.0 ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
          if (ad > nd.p1 / 2.0) s = -s;
          x.grad.v[0] += nd.grad.v[0] * s;
          break;
        }
        case Kind::TvRows: {
          Node& m = at_mut(nd.a);
          const double g = nd.grad.v[0];
          const std::size_t R = m.val.rows, C = m.val.cols;
          for (std::size_t r = 0; r < R; ++r)
            for (std::size_t i = 0; i + 1 < C; ++i) {
              const double d = m.val.v[r * C + i + 1] - m.val.v[r * C + i];
              const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
              m.grad.v[r * C + i + 1] += g * s;
              m.grad.v[r * C + i] -= g * s;
            }
          break;
        }
        case Kind::WeightedSum: {
          for (std::size_t j = 0; j < nd.ins.size(); ++j)
            at_mut(nd.ins[j]).grad.v[0] += nd.grad.v[0] * nd.aux[j];
          break;
        }
      }
    }
  }

  bool grads_finite() const {
    for (const auto& nd : nodes_)
      if (nd.kind == Kind::Leaf)
        for (double g : nd.grad.v)
          if (!std::isfinite(g)) return false;
    return true;
  }

  std::size_t node_count() const { return nodes_.size(); }

  static constexpr double kDegenerateScore = -1e30;
  static constexpr double kDegenerateTol = 1e-12;

 private:
  struct Node {
    Kind kind = Kind::Leaf;
    NodeId a = -1, b = -1;
    std::vector<NodeId> ins;
    Tensor val;
    Tensor grad;
    std::vector<double> aux;
    double p0 = 0, p1 = 0, p2 = 0;
    std::int64_t i0 = 0;
    std::string name;
  };

  NodeId push(Node nd) {
    nodes_.push_back(std::move(nd));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  const Node& at(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Node& at_mut(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }

  // score_i = z_i . zb with z_i = C c_i / |C c_i|, zb = C b / |C b|, C the
  // K-point centering projector. Using (I - z z^T) C as the Jacobian of the
  // normalization:
  //   g_col_i = (g_i / n_i) * C (zb - score_i * z_i)
  //   g_b     = (1 / nb) * C (sum_i g_i z_i - (sum_i g_i score_i) * zb)
  void backward_zncc(Node& nd) {
    Node& dp = at_mut(nd.a);
    Node& b = at_mut(nd.b);
    const std::size_t K = dp.val.rows, N = dp.val.cols;
    const double* zcols = nd.aux.data();
    const double* norms = nd.aux.data() + N * K;
    const double* zb = nd.aux.data() + N * K + N;
    const double nb = nd.aux[N * K + N + K];
    if (nb <= 0.0) return;  // coded vector was degenerate: no gradients

    std::vector<double> acc_zb(K, 0.0);  // sum_i g_i z_i
    double acc_score = 0.0;              // sum_i g_i score_i
    std::vector<double> tmp(K);
    for (std::size_t i = 0; i < N; ++i) {
      const double g = nd.grad.v[i];
      const double n_i = norms[i];
      if (n_i <= 0.0) continue;  // degenerate column
      const double score = nd.val.v[i];
      if (g != 0.0) {
        double mean = 0;
        for (std::size_t r = 0; r < K; ++r) {
          tmp[r] = zb[r] - score * zcols[i * K + r];
          mean += tmp[r];
        }
        mean /= static_cast<double>(K);
        const double scale = g / n_i;
        for (std::size_t r = 0; r < K; ++r) dp.grad.v[r * N + i] += scale * (tmp[r] - mean);
      }
      for (std::size_t r = 0; r < K; ++r) acc_zb[r] += g * zcols[i * K + r];
      acc_score += g * score;
    }
    double mean = 0;
    for (std::size_t r = 0; r < K; ++r) {
      tmp[r] = acc_zb[r] - acc_score * zb[r];
      mean += tmp[r];
    }
    mean /= static_cast<double>(K);
    for (std::size_t r = 0; r < K; ++r) b.grad.v[r] += (tmp[r] - mean) / nb;
  }

  std::vector<Node> nodes_;
};

}  // namespace spc::ad
