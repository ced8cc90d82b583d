#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace cks {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// log(e^a + e^b) without overflow.
inline double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -kInf;
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// |a - b| measured against max(1, |b|); used for log-domain comparisons
/// where the reference value may cross zero.
inline double scaled_error(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

/// x*log(x) with the continuous extension 0 at x = 0.
inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

}  // namespace cks
