#pragma once
// Histogram encoding and depth decoding: coded projection B = D * M, ZNCC
// template matching, matched filtering for full-resolution histograms, and
// the differentiable softargmax used during training.

#include <cmath>
#include <string>
#include <vector>

#include "spc/codes.hpp"
#include "spc/common.hpp"
#include "spc/core.hpp"

namespace spc {

struct CodedValues {
  std::vector<double> b;
  std::string source_label;
};

inline CodedValues encode(const CodingMatrix& d, const std::vector<double>& m) {
  if (m.size() != d.n)
    throw DimensionMismatch("encode: histogram length " + fmt_size(m.size()) +
                            " != matrix n " + fmt_size(d.n));
  CodedValues out;
  out.source_label = d.label;
  out.b.assign(d.k, 0.0);
  for (std::size_t r = 0; r < d.k; ++r) {
    const double* row = d.row(r);
    double s = 0;
    for (std::size_t i = 0; i < d.n; ++i) s += row[i] * m[i];
    out.b[r] = s;
  }
  return out;
}

inline CodedValues encode(const CodingMatrix& d, const Histogram& m) {
  return encode(d, m.as_doubles());
}

// ZNCC scores: cosine similarity between the zero-mean-normalized coded
// vector and each zero-mean unit-norm template column. Degenerate columns
// score -inf so decoding stays total for band-limited matrices.
inline std::vector<double> zncc_scores(const DecodeTemplate& t, const std::vector<double>& b) {
  if (b.size() != t.k) throw DimensionMismatch("zncc: coded length != template k");
  double mean = 0;
  for (double v : b) mean += v;
  mean /= static_cast<double>(t.k);
  std::vector<double> zb(t.k);
  double norm2 = 0;
  for (std::size_t r = 0; r < t.k; ++r) {
    zb[r] = b[r] - mean;
    norm2 += zb[r] * zb[r];
  }
  const double norm = std::sqrt(norm2);
  std::vector<double> scores(t.n, -kInf);
  if (norm <= 1e-12) {
    // Zero-variance coded vector: report the raw centered correlations (all
    // ~0) and let the caller raise the ambiguity.
    for (std::size_t i = 0; i < t.n; ++i) {
      if (t.degenerate[i]) continue;
      const double* zc = t.zcol(i);
      double s = 0;
      for (std::size_t r = 0; r < t.k; ++r) s += zc[r] * zb[r];
      scores[i] = s;
    }
    throw AmbiguousDecode("zncc_decode: coded values have zero variance", std::move(scores));
  }
  for (auto& v : zb) v /= norm;
  for (std::size_t i = 0; i < t.n; ++i) {
    if (t.degenerate[i]) continue;
    const double* zc = t.zcol(i);
    double s = 0;
    for (std::size_t r = 0; r < t.k; ++r) s += zc[r] * zb[r];
    scores[i] = s;
  }
  return scores;
}

inline std::size_t argmax_smallest(const std::vector<double>& scores) {
  std::size_t best = 0;
  double bestv = -kInf;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > bestv) {
      bestv = scores[i];
      best = i;
    }
  }
  return best;
}

// Depth decode via ZNCC template matching; integer bin in [0, N), ties go to
// the smallest index.
inline double zncc_decode(const DecodeTemplate& t, const CodedValues& b) {
  if (t.k < 2) throw InvalidParameter("zncc_decode: need K >= 2");
  std::vector<double> scores = zncc_scores(t, b.b);
  return static_cast<double>(argmax_smallest(scores));
}

// Matched filter over all circular shifts of the waveform shape: argmax_i
// sum_j m_j shape_{(j-i) mod N}. Equivalent to ZNCC with the identity
// template up to a shared affine transform of the scores.
inline double matched_filter_decode(const std::vector<double>& shape,
                                    const std::vector<double>& m) {
  if (shape.size() != m.size())
    throw DimensionMismatch("matched_filter_decode: shape length != histogram length");
  const double sum = vec_sum(shape);
  if (!(sum > 0.0)) throw InvalidParameter("matched_filter_decode: all-zero shape");
  std::vector<double> norm(shape);
  for (auto& v : norm) v /= sum;
  std::vector<double> scores = circular_correlate(m, norm);
  double lo = kInf, hi = -kInf;
  for (double s : scores) {
    lo = s < lo ? s : lo;
    hi = s > hi ? s : hi;
  }
  const double scale = std::max(std::fabs(lo), std::fabs(hi));
  if (!(hi - lo > 1e-12 * std::max(1.0, scale)))
    throw AmbiguousDecode("matched_filter_decode: flat correlation scores", std::move(scores));
  return static_cast<double>(argmax_smallest(scores));
}

inline double matched_filter_decode(const std::vector<double>& shape, const Histogram& m) {
  return matched_filter_decode(shape, m.as_doubles());
}

// Differentiable depth readout: sum_i i * softmax(beta * scores)_i.
// Overflow-safe via max subtraction. -inf scores get zero weight.
inline double softargmax_scores(const std::vector<double>& scores, double beta) {
  if (!(beta > 0.0)) throw InvalidParameter("softargmax_scores: beta must be positive");
  double hi = -kInf;
  for (double s : scores) hi = s > hi ? s : hi;
  double z = 0, acc = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double w = std::isinf(scores[i]) ? 0.0 : std::exp(beta * (scores[i] - hi));
    z += w;
    acc += w * static_cast<double>(i);
  }
  if (!(z > 0.0)) return 0.5 * static_cast<double>(scores.size() - 1);  // all -inf
  return acc / z;
}

}  // namespace spc
