#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tailgarch/common.hpp"
#include "tailgarch/rng.hpp"

namespace tailgarch {

enum class ErrorLaw { Gaussian, Laplace, StandardizedPareto };

/// How the innovation is scaled: unit variance E[eps^2]=1 (the default
/// throughout), or unit absolute mean E|eps|=1 (the WLQML identification
/// experiment).
enum class Standardization { UnitVariance, UnitAbsoluteMean };

/// Innovation law for the GARCH error. The symmetric Pareto variant has raw
/// tail P(|Z| > a) = (1+a)^(-kappa); draws are by CDF inversion
/// |Z| = U^(-1/kappa) - 1 with an independent random sign.
struct ErrorDist {
  ErrorLaw law = ErrorLaw::Gaussian;
  double kappa = 2.5;  // Pareto tail index; used only by StandardizedPareto
  Standardization standardization = Standardization::UnitVariance;

  static ErrorDist gaussian() { return {ErrorLaw::Gaussian, 0.0}; }
  static ErrorDist laplace() { return {ErrorLaw::Laplace, 0.0}; }
  static ErrorDist pareto(double kappa) {
    return {ErrorLaw::StandardizedPareto, kappa};
  }

  /// Multiplier applied to a raw draw so the requested moment equals one.
  /// Raw moments: Pareto E[Z^2] = 2/((kappa-1)(kappa-2)), E|Z| = 1/(kappa-1);
  /// Laplace(b=1) E[X^2] = 2, E|X| = 1; Gaussian E[Z^2] = 1, E|Z| = sqrt(2/pi).
  double scale_factor() const {
    const bool unit_var = standardization == Standardization::UnitVariance;
    switch (law) {
      case ErrorLaw::Gaussian:
        return unit_var ? 1.0 : std::sqrt(1.5707963267948966);  // sqrt(pi/2)
      case ErrorLaw::Laplace:
        return unit_var ? 1.0 / std::sqrt(2.0) : 1.0;
      case ErrorLaw::StandardizedPareto:
        if (unit_var) {
          if (kappa <= 2.0) {
            throw invalid_config(
                "Pareto variance standardization requires kappa > 2, got " +
                std::to_string(kappa));
          }
          return 1.0 / std::sqrt(2.0 / ((kappa - 1.0) * (kappa - 2.0)));
        }
        if (kappa <= 1.0) {
          throw invalid_config(
              "Pareto E|eps|=1 standardization requires kappa > 1, got " +
              std::to_string(kappa));
        }
        return kappa - 1.0;
    }
    return 1.0;
  }

  /// One draw before standardization.
  double draw_raw(Rng& rng) const {
    switch (law) {
      case ErrorLaw::Gaussian:
        return rng.next_normal();
      case ErrorLaw::Laplace: {
        // Inverse CDF of Laplace(0, 1).
        const double u = rng.next_uniform() - 0.5;
        return u < 0.0 ? std::log(1.0 + 2.0 * u) : -std::log(1.0 - 2.0 * u);
      }
      case ErrorLaw::StandardizedPareto: {
        const double u = rng.next_uniform();
        const double magnitude = std::pow(u, -1.0 / kappa) - 1.0;
        return rng.next_uniform() < 0.5 ? -magnitude : magnitude;
      }
    }
    return 0.0;
  }

  double draw(Rng& rng) const { return draw_raw(rng) * scale_factor(); }

  std::string name() const {
    switch (law) {
      case ErrorLaw::Gaussian:
        return "gaussian";
      case ErrorLaw::Laplace:
        return "laplace";
      case ErrorLaw::StandardizedPareto: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "pareto:%g", kappa);
        return buf;
      }
    }
    return "?";
  }
};

/// i.i.d. sample of n standardized draws; deterministic given seed.
inline std::vector<double> sample_error(const ErrorDist& dist,
                                        std::uint64_t seed, std::size_t n) {
  const double scale = dist.scale_factor();  // validates the configuration
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = dist.draw_raw(rng) * scale;
  return out;
}

} // namespace tailgarch
