#pragma once
// Shared error types and small numeric/string helpers.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument values or malformed configuration; maps to CLI exit code 2.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// File/stream failures; the message carries the path and, when known, the byte offset.
class IoError : public Error {
 public:
  using Error::Error;
};

// Decoder could not pick a depth (flat or zero-variance scores).
// Carries the full score vector so callers can inspect or count the event.
class AmbiguousDecode : public Error {
 public:
  AmbiguousDecode(const std::string& what, std::vector<double> scores)
      : Error(what), scores_(std::move(scores)) {}
  const std::vector<double>& scores() const { return scores_; }

 private:
  std::vector<double> scores_;
};

// Shortest round-trip decimal representation.
inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_size(std::uint64_t v) { return std::to_string(v); }

inline double parse_double(const std::string& s, const char* what = "number") {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidParameter(std::string("cannot parse ") + what + " from '" + s + "'");
  }
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\r')) ++pos;
  if (pos != s.size())
    throw InvalidParameter(std::string("trailing garbage after ") + what + " in '" + s + "'");
  return v;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidParameter(msg);
}

}  // namespace spc
