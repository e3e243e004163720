#pragma once

#include <cmath>
#include <limits>

#include "tailgarch/common.hpp"

namespace tailgarch {

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace detail {

/// Regularized lower incomplete gamma P(a, x), by power series for
/// x < a + 1 and by Lentz's continued fraction for the complement
/// otherwise.
inline double gamma_p(double a, double x) {
  if (a <= 0.0) throw invalid_input("gamma_p: shape must be positive");
  if (x < 0.0) throw invalid_input("gamma_p: argument must be nonnegative");
  if (x == 0.0) return 0.0;

  const double log_gamma_a = std::lgamma(a);
  if (x < a + 1.0) {
    // Series: P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a)_{n+1}
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
  }

  // Continued fraction for Q(a,x); P = 1 - Q.
  const double tiny = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - log_gamma_a) * h;
  return 1.0 - q;
}

} // namespace detail

/// Chi-squared CDF with `df` degrees of freedom.
inline double chi2_cdf(double x, int df) {
  if (df < 1) throw invalid_input("chi2_cdf: degrees of freedom must be >= 1");
  if (x <= 0.0) return 0.0;
  return detail::gamma_p(0.5 * df, 0.5 * x);
}

/// Upper-tail quantile helper: the two-sided standard-normal critical
/// value at level 0.05, pinned to its conventional double value.
inline constexpr double kTwoSidedZ05 = 1.959963984540054;

} // namespace tailgarch
