#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace xphase {

/// Bad input: a precondition on parameters, shapes or states does not hold.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation ran but a numerical tolerance or resolution check failed.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Compact number formatting for diagnostics.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

}  // namespace xphase
