#pragma once

#include <cstdio>
#include <string>

namespace stratlca {

/// 12 significant digits, the precision used by every persisted float.
inline std::string to_sig12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline std::string to_fixed(double x, int decimals) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

}  // namespace stratlca
