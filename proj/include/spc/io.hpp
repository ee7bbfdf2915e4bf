#pragma once
// File formats.
//
//   SPCV  waveform/IRF vector:  magic "SPCV", u32 version=1, u32 N,
//         f64 bin_size_ps, then N little-endian f64 values.
//   CSV   waveform: one value per line, optional first line
//         "# n=<N> dt_ps=<delta>".
//   PGM   16-bit binary (P5, maxval 65535, big-endian samples) for maps,
//         with a sidecar text file recording the min/max scaling.
//
// Parse failures report the path and the byte offset where reading stopped.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spc/common.hpp"

namespace spc {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64(const char* what) {
    std::uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::string magic4(const char* what) {
    need(4, what);
    std::string m = data_.substr(pos_, 4);
    pos_ += 4;
    return m;
  }

  void expect_end() {
    if (pos_ != data_.size())
      throw IoError(path_ + ": trailing bytes after payload at offset " + fmt_size(pos_));
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t k, const char* what) {
    if (pos_ + k > data_.size())
      throw IoError(path_ + ": truncated file, needed " + fmt_size(k) + " bytes for " + what +
                    " at offset " + fmt_size(pos_));
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace detail

inline constexpr std::uint32_t kSpcvVersion = 1;

inline void save_waveform(const std::vector<double>& values, double bin_size_ps,
                          const std::string& path) {
  std::string out;
  out += "SPCV";
  detail::put_u32(out, kSpcvVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(values.size()));
  detail::put_f64(out, bin_size_ps);
  for (double v : values) detail::put_f64(out, v);
  detail::write_file(path, out);
}

struct Waveform {
  std::vector<double> values;
  double bin_size_ps = 1.0;
};

inline Waveform load_waveform_binary(const std::string& path) {
  detail::ByteReader r(detail::read_file(path), path);
  if (r.magic4("magic") != "SPCV") throw IoError(path + ": bad magic, expected SPCV");
  const std::uint32_t version = r.u32("version");
  if (version != kSpcvVersion)
    throw IoError(path + ": unsupported SPCV version " + fmt_size(version));
  const std::uint32_t n = r.u32("length");
  Waveform w;
  w.bin_size_ps = r.f64("bin_size_ps");
  w.values.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) w.values[i] = r.f64("value");
  r.expect_end();
  return w;
}

inline Waveform load_waveform_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  Waveform w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        if (tok.rfind("dt_ps=", 0) == 0) w.bin_size_ps = parse_double(tok.substr(6), "dt_ps");
      }
      continue;
    }
    try {
      w.values.push_back(parse_double(line, "waveform value"));
    } catch (const InvalidParameter& e) {
      throw IoError(path + ":" + fmt_size(lineno) + ": " + e.what());
    }
  }
  if (w.values.empty()) throw IoError(path + ": no values");
  return w;
}

// Binary if the file starts with the SPCV magic, text otherwise.
inline Waveform load_waveform(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.close();
  if (std::memcmp(magic, "SPCV", 4) == 0) return load_waveform_binary(path);
  return load_waveform_csv(path);
}

inline void save_waveform_csv(const std::vector<double>& values, double bin_size_ps,
                              const std::string& path) {
  std::string out = "# n=" + fmt_size(values.size()) + " dt_ps=" + fmt_double(bin_size_ps) + "\n";
  for (double v : values) {
    out += fmt_double(v);
    out += '\n';
  }
  detail::write_file(path, out);
}

// 16-bit binary PGM plus a sidecar "<path>.txt" documenting the scaling
// applied (value = min + pixel/65535 * (max-min)).
inline void save_pgm16(const std::vector<double>& values, std::size_t height, std::size_t width,
                       const std::string& path) {
  if (values.size() != height * width)
    throw DimensionMismatch("save_pgm16: values size does not match dims");
  double lo = kInf, hi = -kInf;
  for (double v : values) {
    if (std::isnan(v)) continue;
    lo = v < lo ? v : lo;
    hi = v > hi ? v : hi;
  }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 0.0;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::string out = "P5\n" + fmt_size(width) + " " + fmt_size(height) + "\n65535\n";
  for (double v : values) {
    double t = std::isnan(v) ? 0.0 : (v - lo) / span;
    const std::uint32_t p = static_cast<std::uint32_t>(t * 65535.0 + 0.5);
    const std::uint32_t q = p > 65535 ? 65535 : p;
    out.push_back(static_cast<char>((q >> 8) & 0xff));  // MSB first per PGM
    out.push_back(static_cast<char>(q & 0xff));
  }
  detail::write_file(path, out);
  detail::write_file(path + ".txt", "min=" + fmt_double(lo) + "\nmax=" + fmt_double(hi) +
                                        "\nmaxval=65535\nscaling=value = min + pixel/65535 * "
                                        "(max-min); NaN pixels stored as 0\n");
}

// Rectangular CSV of doubles (row per line, comma separated). NaN cells are
// written as "nan".
inline void save_csv_grid(const std::vector<double>& values, std::size_t height,
                          std::size_t width, const std::string& path) {
  if (values.size() != height * width)
    throw DimensionMismatch("save_csv_grid: values size does not match dims");
  std::string out;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (x) out += ',';
      const double v = values[y * width + x];
      out += std::isnan(v) ? "nan" : fmt_double(v);
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

struct CsvGrid {
  std::vector<double> values;
  std::size_t height = 0, width = 0;
};

inline CsvGrid load_csv_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  CsvGrid g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      if (cell == "nan")
        row.push_back(kNaN);
      else
        row.push_back(parse_double(cell, ("cell at line " + fmt_size(lineno)).c_str()));
    }
    if (g.width == 0) g.width = row.size();
    if (row.size() != g.width)
      throw IoError(path + ":" + fmt_size(lineno) + ": ragged row, expected " +
                    fmt_size(g.width) + " cells");
    g.values.insert(g.values.end(), row.begin(), row.end());
    ++g.height;
  }
  if (g.height == 0) throw IoError(path + ": empty grid");
  return g;
}

// Plain key=value metadata files (one pair per line, '#' comments).
inline void save_keyvalues(const std::vector<std::pair<std::string, std::string>>& kv,
                           const std::string& path) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  detail::write_file(path, out);
}

inline std::vector<std::pair<std::string, std::string>> load_keyvalues(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path + ": malformed line '" + line + "'");
    kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

}  // namespace spc
