#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailgarch/common.hpp"

namespace tailgarch {

enum class TrimMode { StrongAsym, WeakAsym, Symmetric, Custom };

/// Trimming fractiles. k1 counts trimmed negative-tail values of the
/// centered errors, k2 positive-tail values, k_y observations trimmed by
/// lagged |y|. A zero fractile disables that channel entirely (used by the
/// reduction identities); active fractiles are >= 1.
struct TrimPlan {
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  std::size_t k_y = 0;
  TrimMode mode = TrimMode::Custom;
  /// false: closed interval at the order statistics (values equal to a
  /// threshold are kept; trims (k1-1)+(k2-1) on continuous data).
  /// true: thresholds themselves are trimmed too, exactly k1+k2 removals.
  bool exclusive = false;

  static TrimPlan none() { return {}; }

  bool any_error_trim() const { return k1 > 0 || k2 > 0; }
};

/// Per-fit trimming telemetry. Counts are reported under both interval
/// conventions; trimmed_neg/trimmed_pos mirror the plan's active one.
struct TrimDiagnostics {
  double neg_threshold = -std::numeric_limits<double>::infinity();
  double pos_threshold = std::numeric_limits<double>::infinity();
  std::size_t trimmed_neg = 0;
  std::size_t trimmed_pos = 0;
  std::size_t trimmed_y = 0;
  std::size_t trimmed_neg_closed = 0;
  std::size_t trimmed_pos_closed = 0;
  std::size_t trimmed_neg_exclusive = 0;
  std::size_t trimmed_pos_exclusive = 0;
};

/// Bracket rounding used by every fractile formula: round half up.
inline std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

/// Fractile schedule k2 = max{1,[lambda*n/ln n]}, k1 = m*k2 with mode
/// multiplier m in {35 strong asym, 10 weak asym, 1 symmetric}, and
/// k_y = max{1,[0.1*ln n]}.
inline TrimPlan fractile_schedule(std::size_t n, double lambda = 0.025,
                                  TrimMode mode = TrimMode::StrongAsym) {
  if (n < 10) throw invalid_input("fractile_schedule: n < 10");
  if (!(lambda > 0.0) || lambda >= 1.0)
    throw invalid_config("fractile_schedule: lambda must be in (0,1)");

  TrimPlan plan;
  plan.mode = mode;
  const double log_n = std::log(static_cast<double>(n));
  plan.k2 = std::max<std::size_t>(
      1, round_half_up(lambda * static_cast<double>(n) / log_n));
  switch (mode) {
    case TrimMode::StrongAsym:
      plan.k1 = 35 * plan.k2;
      break;
    case TrimMode::WeakAsym:
      plan.k1 = 10 * plan.k2;
      break;
    case TrimMode::Symmetric:
      plan.k1 = plan.k2;
      break;
    case TrimMode::Custom:
      throw invalid_config("fractile_schedule: custom mode needs explicit fractiles");
  }
  plan.k_y = std::max<std::size_t>(1, round_half_up(0.1 * log_n));
  if (plan.k1 + plan.k2 >= n)
    throw invalid_config("fractile_schedule: k1 + k2 >= n at n = " +
                         std::to_string(n));
  return plan;
}

/// A concrete o(sqrt(n)) rule for thin-tailed errors:
/// k1 = k2 = max{1,[0.025*sqrt(n)]}.
inline TrimPlan thin_tail_schedule(std::size_t n) {
  if (n < 10) throw invalid_input("thin_tail_schedule: n < 10");
  TrimPlan plan;
  plan.mode = TrimMode::Symmetric;
  plan.k1 = plan.k2 = std::max<std::size_t>(
      1, round_half_up(0.025 * std::sqrt(static_cast<double>(n))));
  plan.k_y = std::max<std::size_t>(
      1, round_half_up(0.1 * std::log(static_cast<double>(n))));
  return plan;
}

/// Residual of the pre-asymptotic Pareto balance relation
///   (k2/n)^(1-2/kappa) = ((kappa-2)/2) * (-1 + (1-k1/n)^(-2/kappa)
///                        + (2/(kappa-2))*(k1/n))
/// at the given integer fractiles. Positive residual means k1 is too small.
inline double pareto_balance_residual(double kappa, std::size_t n,
                                      std::size_t k1, std::size_t k2) {
  const double nn = static_cast<double>(n);
  const double lhs =
      std::pow(static_cast<double>(k2) / nn, 1.0 - 2.0 / kappa);
  const double x = static_cast<double>(k1) / nn;
  const double rhs = 0.5 * (kappa - 2.0) *
                     (-1.0 + std::pow(1.0 - x, -2.0 / kappa) +
                      (2.0 / (kappa - 2.0)) * x);
  return lhs - rhs;
}

/// The k2 the balance relation implies for a given k1 (diagnostic output).
inline double pareto_balance_implied_k2(double kappa, std::size_t n,
                                        std::size_t k1) {
  const double nn = static_cast<double>(n);
  const double x = static_cast<double>(k1) / nn;
  const double rhs = 0.5 * (kappa - 2.0) *
                     (-1.0 + std::pow(1.0 - x, -2.0 / kappa) +
                      (2.0 / (kappa - 2.0)) * x);
  if (rhs <= 0.0) return 0.0;
  return nn * std::pow(rhs, kappa / (kappa - 2.0));
}

/// Solves the balance relation for k1 by integer bisection over
/// [k2, n-k2]; returns the integer minimizing the absolute residual.
/// The right side is strictly increasing in k1, so the residual crosses
/// zero at most once.
inline std::size_t pareto_balance_k1(double kappa, std::size_t n,
                                     std::size_t k2) {
  if (!(kappa > 2.0) || !(kappa < 4.0))
    throw invalid_input("pareto_balance_k1: kappa must be in (2,4)");
  if (k2 < 1 || k2 >= n)
    throw invalid_input("pareto_balance_k1: need 1 <= k2 < n");

  std::size_t lo = k2;
  std::size_t hi = n - k2;
  double r_lo = pareto_balance_residual(kappa, n, lo, k2);
  double r_hi = pareto_balance_residual(kappa, n, hi, k2);
  if (r_lo == 0.0) return lo;
  if (r_hi == 0.0) return hi;
  if ((r_lo > 0.0) == (r_hi > 0.0)) {
    throw invalid_config(
        "pareto_balance_k1: residual does not change sign on [k2, n-k2]; "
        "monotonicity failure for kappa = " + std::to_string(kappa));
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double r_mid = pareto_balance_residual(kappa, n, mid, k2);
    if ((r_mid > 0.0) == (r_lo > 0.0)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
      r_hi = r_mid;
    }
  }
  return std::abs(r_lo) <= std::abs(r_hi) ? lo : hi;
}

/// Scratch buffers so the criterion hot path does not allocate.
struct TrimWorkspace {
  std::vector<std::pair<double, std::uint32_t>> pairs;
};

/// Order-statistic trimming indicators for the centered errors.
///
/// The negative-tail threshold is the k1-th smallest of E_t*I(E_t<0)
/// (zero-padded), the positive-tail threshold the k2-th largest of
/// E_t*I(E_t>=0). An observation is kept when it lies inside the closed
/// interval of the two thresholds; the exclusive convention also removes
/// the threshold observations themselves. Ties at a threshold are broken
/// by original index, earlier index trimmed first, so counts are
/// deterministic on any input.
inline void trim_indicators_into(std::span<const double> centered,
                                 const TrimPlan& plan,
                                 std::vector<std::uint8_t>& indicators,
                                 TrimDiagnostics* diagnostics,
                                 TrimWorkspace& workspace) {
  const std::size_t m = centered.size();
  if (plan.any_error_trim() && m <= plan.k1 + plan.k2)
    throw invalid_config("trim_indicators: need length > k1 + k2");

  indicators.assign(m, 1);
  TrimDiagnostics diag;

  auto& pairs = workspace.pairs;

  if (plan.k1 >= 1) {
    pairs.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      pairs[i] = {centered[i] < 0.0 ? centered[i] : 0.0,
                  static_cast<std::uint32_t>(i)};
    // k1-th smallest under ascending (value, index) order.
    std::nth_element(pairs.begin(), pairs.begin() + (plan.k1 - 1),
                     pairs.end());
    const auto [neg_value, neg_index] = pairs[plan.k1 - 1];
    diag.neg_threshold = neg_value;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = centered[i];
      if (e >= 0.0) continue;  // only genuine negative-tail members trim
      const bool below =
          e < neg_value || (e == neg_value && i < neg_index);
      const bool at_threshold = e == neg_value && i == neg_index;
      if (below) ++diag.trimmed_neg_closed;
      if (below || at_threshold) ++diag.trimmed_neg_exclusive;
      if (below || (plan.exclusive && at_threshold)) indicators[i] = 0;
    }
  }

  if (plan.k2 >= 1) {
    pairs.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      pairs[i] = {centered[i] >= 0.0 ? centered[i] : 0.0,
                  static_cast<std::uint32_t>(i)};
    // k2-th largest; larger value wins, ties go to the earlier index.
    auto more_extreme = [](const std::pair<double, std::uint32_t>& a,
                           const std::pair<double, std::uint32_t>& b) {
      return a.first > b.first ||
             (a.first == b.first && a.second < b.second);
    };
    std::nth_element(pairs.begin(), pairs.begin() + (plan.k2 - 1),
                     pairs.end(), more_extreme);
    const auto [pos_value, pos_index] = pairs[plan.k2 - 1];
    diag.pos_threshold = pos_value;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = centered[i];
      if (e < 0.0) continue;
      const bool above =
          e > pos_value || (e == pos_value && i < pos_index);
      const bool at_threshold = e == pos_value && i == pos_index;
      if (above) ++diag.trimmed_pos_closed;
      if (above || at_threshold) ++diag.trimmed_pos_exclusive;
      if (above || (plan.exclusive && at_threshold)) indicators[i] = 0;
    }
  }

  diag.trimmed_neg =
      plan.exclusive ? diag.trimmed_neg_exclusive : diag.trimmed_neg_closed;
  diag.trimmed_pos =
      plan.exclusive ? diag.trimmed_pos_exclusive : diag.trimmed_pos_closed;
  if (diagnostics) *diagnostics = diag;
}

inline std::vector<std::uint8_t> trim_indicators(
    std::span<const double> centered, const TrimPlan& plan,
    TrimDiagnostics* diagnostics = nullptr) {
  std::vector<std::uint8_t> indicators;
  TrimWorkspace workspace;
  trim_indicators_into(centered, plan, indicators, diagnostics, workspace);
  return indicators;
}

/// Indicator for trimming observation t by its lagged |y_{t-1}|: zero when
/// |y_{t-1}| strictly exceeds the k_y-th largest absolute value of the
/// series, so k_y = 1 trims nothing. The first observation has no lag and
/// keeps indicator 1. k_y = 0 disables the channel.
inline std::vector<std::uint8_t> trim_by_lag_y(std::span<const double> series,
                                               std::size_t k_y) {
  const std::size_t n = series.size();
  std::vector<std::uint8_t> indicators(n, 1);
  if (k_y == 0 || n == 0) return indicators;
  if (k_y > n) throw invalid_config("trim_by_lag_y: k_y > length");

  std::vector<std::pair<double, std::uint32_t>> pairs(n);
  for (std::size_t i = 0; i < n; ++i)
    pairs[i] = {std::fabs(series[i]), static_cast<std::uint32_t>(i)};
  auto more_extreme = [](const std::pair<double, std::uint32_t>& a,
                         const std::pair<double, std::uint32_t>& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  std::nth_element(pairs.begin(), pairs.begin() + (k_y - 1), pairs.end(),
                   more_extreme);
  const auto [threshold, threshold_index] = pairs[k_y - 1];
  for (std::size_t t = 1; t < n; ++t) {
    const double lag = std::fabs(series[t - 1]);
    const bool above = lag > threshold ||
                       (lag == threshold && (t - 1) < threshold_index);
    if (above) indicators[t] = 0;
  }
  return indicators;
}

} // namespace tailgarch
