#pragma once

#include <cmath>

namespace ccps {

inline constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2*pi)

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF via erfc, stable in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// log N(x); switches to the asymptotic expansion once erfc underflows.
inline double log_norm_cdf(double x) {
  if (x > -36.0) return std::log(norm_cdf(x));
  double x2 = x * x;
  // N(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4) for x << 0
  return -0.5 * x2 - std::log(-x) + std::log(kInvSqrt2Pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

}  // namespace ccps
