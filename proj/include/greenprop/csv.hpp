#pragma once

#include <cstdio>
#include <string>

namespace greenprop {

/// Round-trippable text for a double ("%.17g").
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace greenprop
