#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hcsaddle/error.hpp"

namespace hcsaddle {

using Vector = std::vector<double>;

inline void require_same_size(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw Error(ErrorCode::kDimension, std::string(where) + ": dimension mismatch (" +
                                           std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

[[nodiscard]] inline double dot(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

[[nodiscard]] inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

/// y = x + b * y
inline void xpby(std::span<const double> x, double b, std::span<double> y) {
  require_same_size(x.size(), y.size(), "xpby");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + b * y[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

[[nodiscard]] inline bool is_zero(std::span<const double> x) {
  for (double v : x) {
    if (v != 0.0) return false;
  }
  return true;
}

}  // namespace hcsaddle
