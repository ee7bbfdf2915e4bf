#pragma once
// Per-pixel depth-map evaluation: synthetic transient cubes from depth/albedo
// maps, cube ingestion, batch encode/decode, and map export.
//
//   SPCC  transient cube: magic "SPCC", u32 version=1, u32 H, u32 W, u32 N,
//         f64 bin_size_ps, then H*W*N little-endian f64 (pixel-major,
//         row-major pixels).
//
// Synthesis is direct-only (no multipath); cubes with indirect reflections
// can be ingested from files produced elsewhere.

#include <cstdint>
#include <string>
#include <vector>

#include "spc/codes.hpp"
#include "spc/common.hpp"
#include "spc/core.hpp"
#include "spc/decode.hpp"
#include "spc/evalharness.hpp"
#include "spc/io.hpp"
#include "spc/rng.hpp"
#include "spc/threadpool.hpp"

namespace spc {

struct DepthMap {
  std::size_t height = 0, width = 0;
  std::vector<double> values;  // bins in [0, N); NaN marks invalid pixels

  DepthMap() = default;
  DepthMap(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), values(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::size_t pixels() const { return values.size(); }
};

struct TransientCube {
  std::size_t height = 0, width = 0, n = 0;
  double bin_size_ps = 1.0;
  std::vector<double> data;  // height*width*n

  double* pixel(std::size_t y, std::size_t x) { return data.data() + (y * width + x) * n; }
  const double* pixel(std::size_t y, std::size_t x) const {
    return data.data() + (y * width + x) * n;
  }
};

// Per pixel: albedo * phi_sig_base photons in the illumination shape shifted
// to the pixel depth, plus a uniform background of phi_sig_base / sbr photons.
inline TransientCube synth_cube(const DepthMap& depth, const DepthMap& albedo,
                                const std::vector<double>& illum_shape, double phi_sig_base,
                                double sbr, double bin_size_ps = 1.0) {
  if (depth.height != albedo.height || depth.width != albedo.width)
    throw DimensionMismatch("synth_cube: depth and albedo dims differ");
  if (!(sbr > 0.0)) throw InvalidParameter("synth_cube: sbr must be positive");
  const double sum = vec_sum(illum_shape);
  if (!(sum > 0.0)) throw InvalidParameter("synth_cube: all-zero illumination shape");
  std::vector<double> shape(illum_shape);
  for (auto& v : shape) v /= sum;

  TransientCube cube;
  cube.height = depth.height;
  cube.width = depth.width;
  cube.n = shape.size();
  cube.bin_size_ps = bin_size_ps;
  cube.data.resize(cube.height * cube.width * cube.n);
  const double bkg = phi_sig_base / sbr;
  for (std::size_t y = 0; y < depth.height; ++y)
    for (std::size_t x = 0; x < depth.width; ++x) {
      const double a = albedo.at(y, x);
      std::vector<double> r = incident_from(shape, a * phi_sig_base, bkg, depth.at(y, x));
      double* px = cube.pixel(y, x);
      for (std::size_t i = 0; i < cube.n; ++i) px[i] = r[i];
    }
  return cube;
}

struct CubeDecodeResult {
  DepthMap depth;
  DepthMap error;  // circular error vs ground truth; empty if no truth given
  double mae_bins = 0, rmse_bins = 0;
  std::size_t invalid_pixels = 0;
  std::size_t valid_pixels = 0;
};

// Per pixel: Poisson-sample (unless noiseless), encode, decode. Pixels are
// independent and processed in parallel with per-pixel RNG streams, so the
// result does not depend on the worker count. Ambiguous pixels become NaN and
// are counted, never fatal.
inline CubeDecodeResult decode_cube(const TransientCube& cube, const SchemeSpec& scheme,
                                    std::uint64_t seed, bool noiseless = false,
                                    const DepthMap* truth = nullptr, std::size_t threads = 1) {
  if (scheme.d.n != cube.n)
    throw DimensionMismatch("decode_cube: scheme n does not match cube n");
  if (truth && (truth->height != cube.height || truth->width != cube.width))
    throw DimensionMismatch("decode_cube: truth dims do not match cube");

  const std::vector<double> shape = scheme.illum.shape();
  DecodeTemplate tmpl;
  if (scheme.decode == DecodeKind::Zncc) tmpl = correlate_with_waveform(scheme.d, shape);

  CubeDecodeResult res;
  res.depth = DepthMap(cube.height, cube.width, kNaN);
  if (truth) res.error = DepthMap(cube.height, cube.width, kNaN);

  parallel_for(cube.height * cube.width, threads, [&](std::size_t p) {
    const std::size_t y = p / cube.width, x = p % cube.width;
    const double* px = cube.pixel(y, x);
    std::vector<double> m(px, px + cube.n);
    bool flat = true;
    for (double v : m)
      if (v != m[0]) {
        flat = false;
        break;
      }
    if (!noiseless) {
      Rng rng = Rng::stream(seed, p, 0, 2);
      Histogram h = sample_histogram(m, 1000, SampleMode::Poisson, rng, cube.bin_size_ps);
      m = h.as_doubles();
    } else if (flat) {
      return;  // stays NaN; counted below
    }
    try {
      if (scheme.decode == DecodeKind::MatchedFilter)
        res.depth.values[p] = matched_filter_decode(shape, m);
      else
        res.depth.values[p] = zncc_decode(tmpl, encode(scheme.d, m));
    } catch (const AmbiguousDecode&) {
      // stays NaN
    }
  });

  double abs_sum = 0, sq_sum = 0;
  for (std::size_t p = 0; p < res.depth.pixels(); ++p) {
    if (std::isnan(res.depth.values[p])) {
      ++res.invalid_pixels;
      continue;
    }
    ++res.valid_pixels;
    if (truth) {
      const double err = circular_error(res.depth.values[p], truth->values[p],
                                        static_cast<double>(cube.n));
      res.error.values[p] = err;
      abs_sum += err;
      sq_sum += err * err;
    }
  }
  if (truth && res.valid_pixels > 0) {
    res.mae_bins = abs_sum / static_cast<double>(res.valid_pixels);
    res.rmse_bins = std::sqrt(sq_sum / static_cast<double>(res.valid_pixels));
  }
  return res;
}

// Writes <prefix>.pgm (16-bit P5 with <prefix>.pgm.txt scaling sidecar) and
// <prefix>.csv for a map.
inline void export_map(const DepthMap& map, const std::string& prefix) {
  save_pgm16(map.values, map.height, map.width, prefix + ".pgm");
  save_csv_grid(map.values, map.height, map.width, prefix + ".csv");
}

inline void export_maps(const DepthMap& depth, const DepthMap& error,
                        const std::string& path_prefix) {
  export_map(depth, path_prefix + "_depth");
  if (error.pixels() > 0) export_map(error, path_prefix + "_error");
}

inline DepthMap depth_map_from_csv(const std::string& path) {
  CsvGrid g = load_csv_grid(path);
  DepthMap m(g.height, g.width);
  m.values = std::move(g.values);
  return m;
}

// Staircase test scene: `steps` depth plateaus spanning the middle 80% of the
// unambiguous range, constant albedo 1.
inline DepthMap make_staircase_depth(std::size_t height, std::size_t width, std::size_t n,
                                     std::size_t steps = 8) {
  require(steps >= 1 && height >= steps, "make_staircase_depth: bad steps/height");
  DepthMap m(height, width);
  const double lo = 0.1 * static_cast<double>(n);
  const double span = 0.8 * static_cast<double>(n);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t step = y * steps / height;
    const double d = lo + span * static_cast<double>(step) / static_cast<double>(steps - 1 > 0 ? steps - 1 : 1);
    for (std::size_t x = 0; x < width; ++x) m.at(y, x) = d;
  }
  return m;
}

inline constexpr std::uint32_t kSpccVersion = 1;

inline void save_cube(const TransientCube& cube, const std::string& path) {
  std::string out;
  out += "SPCC";
  detail::put_u32(out, kSpccVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(cube.height));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.width));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n));
  detail::put_f64(out, cube.bin_size_ps);
  for (double v : cube.data) detail::put_f64(out, v);
  detail::write_file(path, out);
}

inline TransientCube load_cube(const std::string& path) {
  detail::ByteReader r(detail::read_file(path), path);
  if (r.magic4("magic") != "SPCC") throw IoError(path + ": bad magic, expected SPCC");
  const std::uint32_t version = r.u32("version");
  if (version != kSpccVersion)
    throw IoError(path + ": unsupported SPCC version " + fmt_size(version));
  TransientCube cube;
  cube.height = r.u32("height");
  cube.width = r.u32("width");
  cube.n = r.u32("n");
  const std::uint64_t total =
      static_cast<std::uint64_t>(cube.height) * cube.width * cube.n;
  if (total == 0 || total > (1ull << 33))
    throw IoError(path + ": unreasonable cube dims");
  cube.bin_size_ps = r.f64("bin_size_ps");
  cube.data.resize(total);
  for (auto& v : cube.data) v = r.f64("cube value");
  r.expect_end();
  return cube;
}

}  // namespace spc
