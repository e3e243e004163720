#pragma once

#include <cmath>
#include <string>

#include "tailgarch/common.hpp"

namespace tailgarch {

enum class RedescenderKind { SimpleTrim, Hampel, TukeyBisquare, Exponential };

/// Redescending transform family psi(u,c) = u * w(u,c) * I(|u| <= c).
/// The weight w lies in [0,1] and tends to 1 as c grows (negligibility),
/// so psi(u,c) -> u for every fixed u. Hampel's inner thresholds are
/// parameterized as ratios of the data-driven outer threshold c, keeping
/// 0 < a < b < c for every c.
struct Redescender {
  RedescenderKind kind = RedescenderKind::SimpleTrim;
  double a_ratio = 0.25;  ///< Hampel a/c
  double b_ratio = 0.5;   ///< Hampel b/c

  static Redescender simple_trim() { return {RedescenderKind::SimpleTrim}; }
  static Redescender tukey() { return {RedescenderKind::TukeyBisquare}; }
  static Redescender exponential() { return {RedescenderKind::Exponential}; }
  static Redescender hampel(double a_ratio = 0.25, double b_ratio = 0.5) {
    Redescender r{RedescenderKind::Hampel, a_ratio, b_ratio};
    r.validate();
    return r;
  }

  void validate() const {
    if (kind == RedescenderKind::Hampel &&
        !(a_ratio > 0.0 && a_ratio < b_ratio && b_ratio < 1.0)) {
      throw invalid_config("Redescender: Hampel needs 0 < a/c < b/c < 1");
    }
  }

  std::string name() const {
    switch (kind) {
      case RedescenderKind::SimpleTrim:
        return "simple";
      case RedescenderKind::Hampel:
        return "hampel";
      case RedescenderKind::TukeyBisquare:
        return "tukey";
      case RedescenderKind::Exponential:
        return "exponential";
    }
    return "?";
  }
};

/// The weight w(u,c)*I(|u| <= c) alone, in [0,1].
inline double redescend_weight_only(double u, double c,
                                    const Redescender& r) {
  if (!(c > 0.0)) throw invalid_input("redescend: threshold c must be > 0");
  const double au = std::fabs(u);
  if (au > c) return 0.0;
  switch (r.kind) {
    case RedescenderKind::SimpleTrim:
      return 1.0;
    case RedescenderKind::TukeyBisquare: {
      const double z = 1.0 - (u / c) * (u / c);
      return z * z;
    }
    case RedescenderKind::Exponential:
      return std::exp(-au / c);
    case RedescenderKind::Hampel: {
      const double a = r.a_ratio * c;
      const double b = r.b_ratio * c;
      if (au <= a) return 1.0;
      if (au <= b) return a / au;
      return a * (c - au) / (au * (c - b));
    }
  }
  return 0.0;
}

/// psi(u,c) = u * w(u,c) * I(|u| <= c).
inline double redescend_weight(double u, double c, const Redescender& r) {
  return u * redescend_weight_only(u, c, r);
}

} // namespace tailgarch
