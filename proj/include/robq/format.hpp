#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace robq {

// Shortest decimal string that round-trips to the same double; "inf"/"-inf"
// for infinities.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed notation with `digits` decimals (human summaries).
inline std::string format_fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

}  // namespace robq
