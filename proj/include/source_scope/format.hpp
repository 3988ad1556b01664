#pragma once

// Locale-independent, byte-stable number formatting for CSV and SVG output.

#include <charconv>
#include <cmath>
#include <string>

namespace sscope {

/// Shortest round-trip representation; "nan", "inf" and "-inf" for non-finite values.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Fixed notation with the given number of decimals (plot coordinates).
inline std::string fmt_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  return std::string(buf, res.ptr);
}

}  // namespace sscope
