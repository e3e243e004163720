#pragma once

#include <array>
#include <cmath>
#include <string>

#include "tailgarch/common.hpp"

namespace tailgarch {

/// Smallest admissible coordinate of the parameter space.
inline constexpr double kIota = 1e-10;
/// Upper bound for omega; alpha and beta are bounded by 1 - kIota.
inline constexpr double kOmegaMax = 2.0;

/// GARCH(1,1) parameter point theta = (omega, alpha, beta) constrained to
/// the box [iota,2] x [iota,1-iota] x [iota,1-iota]. Construction rejects
/// points outside the box, so a GarchParams value is always feasible.
struct GarchParams {
  double omega;
  double alpha;
  double beta;

  GarchParams(double omega_, double alpha_, double beta_)
      : omega(omega_), alpha(alpha_), beta(beta_) {
    if (!in_box(omega, alpha, beta)) {
      throw invalid_input("GarchParams outside the parameter box: (" +
                          std::to_string(omega) + ", " + std::to_string(alpha) +
                          ", " + std::to_string(beta) + ")");
    }
  }

  static bool in_box(double omega, double alpha, double beta) {
    return std::isfinite(omega) && std::isfinite(alpha) &&
           std::isfinite(beta) && omega >= kIota && omega <= kOmegaMax &&
           alpha >= kIota && alpha <= 1.0 - kIota && beta >= kIota &&
           beta <= 1.0 - kIota;
  }

  /// Coordinates clamped into the box; entry point for optimizer iterates.
  static GarchParams projected(double omega, double alpha, double beta) {
    auto clamp = [](double x, double lo, double hi) {
      if (!(x > lo)) return lo;  // also catches NaN
      return x < hi ? x : hi;
    };
    return GarchParams(clamp(omega, kIota, kOmegaMax),
                       clamp(alpha, kIota, 1.0 - kIota),
                       clamp(beta, kIota, 1.0 - kIota));
  }

  std::array<double, 3> as_array() const { return {omega, alpha, beta}; }

  static GarchParams from_array(const std::array<double, 3>& x) {
    return GarchParams(x[0], x[1], x[2]);
  }

  /// alpha + beta >= 1: the variance recursion has no stationary solution.
  bool is_nonstationary() const { return alpha + beta >= 1.0; }
};

} // namespace tailgarch
