#pragma once

#include <cstdio>
#include <string>

namespace quasivar {

/// Shortest form that round-trips every double exactly.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace quasivar
