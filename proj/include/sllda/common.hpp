#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sllda {

using LabelId = std::int32_t;
using FeatureId = std::int32_t;

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failures (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input data; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::int64_t line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_ = 0;
};

// Identifier outside the header-declared range.
class BoundsError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Structurally valid token with an inadmissible value (e.g. negative count).
class ValueError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Model directory with bad magic, unsupported version or checksum mismatch.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

// Violated precondition of an internal contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

// FNV-1a 64-bit, used to checksum serialized model sections.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed six decimals, the precision used by score and similarity files.
inline std::string format_fixed6(double v) {
  char buf[64];
  int n = std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline bool parse_double(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

template <typename Int>
inline bool parse_int(std::string_view s, Int& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace sllda
