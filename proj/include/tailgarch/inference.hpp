#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tailgarch/common.hpp"
#include "tailgarch/estimators.hpp"
#include "tailgarch/linalg.hpp"
#include "tailgarch/model.hpp"
#include "tailgarch/special.hpp"
#include "tailgarch/trimming.hpp"

namespace tailgarch {

/// Plug-in scale matrix and the covariance of theta_hat it implies.
struct ScaleEstimate {
  Mat3 v_hat;       ///< scale matrix (grows with the sample size)
  Mat3 cov_theta;   ///< v_hat^{-1}
  std::array<double, 3> se{};  ///< sqrt of cov_theta diagonal
  double denominator = 0.0;    ///< scalar error-moment plug-in
  bool floored = false;        ///< an eigenvalue hit the inversion floor
};

/// Scale for the (tail-trimmed) Gaussian quasi-likelihood estimator:
///   V = m * [(1/m) sum E_t^2 * I_t]^{-1} * (1/m) sum s_t s_t',
/// summing t = 2..n with m = n-1. The score outer product is untrimmed.
/// With an all-zero plan the denominator reduces to the moment form
/// m4 - 2*m2 + 1 of the residuals, the classic Gaussian sandwich scalar.
inline ScaleEstimate qmttl_scale(std::span<const double> series,
                                 const GarchParams& params,
                                 const TrimPlan& plan = {},
                                 bool use_y_trim = true) {
  const std::size_t n = series.size();
  if (n < 2) throw invalid_input("qmttl_scale: series length < 2");
  const VolPath path = iterate_volatility(params, series);
  const double m = static_cast<double>(n - 1);

  std::vector<std::uint8_t> err_ind;
  if (plan.any_error_trim()) {
    err_ind = trim_indicators(
        std::span<const double>(path.centered.data() + 1, n - 1), plan);
  }
  std::vector<std::uint8_t> y_ind;
  if (use_y_trim && plan.k_y > 0) y_ind = trim_by_lag_y(series, plan.k_y);

  double d = 0.0;
  Mat3 score_outer = Mat3::zero();
  for (std::size_t t = 1; t < n; ++t) {
    double e2 = path.centered[t] * path.centered[t];
    if (!err_ind.empty() && err_ind[t - 1] == 0) e2 = 0.0;
    if (!y_ind.empty() && y_ind[t] == 0) e2 = 0.0;
    d += e2;
    score_outer.add_outer(path.s[t], 1.0);
  }
  d /= m;
  score_outer.scale(1.0 / m);
  if (!(d > 0.0))
    throw numerical_rank_error(
        "qmttl_scale: trimmed squared-error moment is zero");

  ScaleEstimate out;
  out.denominator = d;
  out.v_hat = score_outer;
  out.v_hat.scale(m / d);
  const InversionResult inv = invert_spd(out.v_hat);
  out.cov_theta = inv.inverse;
  out.floored = inv.floored;
  for (int i = 0; i < 3; ++i)
    out.se[i] = std::sqrt(std::max(0.0, out.cov_theta(i, i)));
  return out;
}

/// Scale for the redescended method-of-moments estimator:
///   V = m * [(1/m) sum psi_t^4 - 1]^{-1}
///         * (1/m) sum (s_t - mean s)(s_t - mean s)',
/// summing t = 2..n with m = n-1; psi_t redescends the residual at the
/// k-th largest |residual| threshold of the same index set.
inline ScaleEstimate mnwm_scale(std::span<const double> series,
                                const GarchParams& params,
                                const FitConfig& config = {}) {
  const std::size_t n = series.size();
  if (n < 3) throw invalid_input("mnwm_scale: series length < 3");
  const VolPath path = iterate_volatility(params, series);
  const std::size_t m = n - 1;

  const std::size_t k = config.plan.k2 > 0
                            ? config.plan.k2
                            : detail::default_tail_count(n);
  if (k >= m) throw invalid_config("mnwm_scale: tail count must be < n-1");

  std::vector<double> abs_res(m);
  for (std::size_t t = 1; t < n; ++t)
    abs_res[t - 1] = std::fabs(path.residuals[t]);
  std::vector<double> sorted = abs_res;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(),
                   std::greater<double>());
  const double c = sorted[k - 1];
  if (!(c > 0.0))
    throw invalid_data("mnwm_scale: residual threshold collapsed to zero");

  std::vector<std::uint8_t> y_ind;
  if (config.use_y_trim && config.plan.k_y > 0)
    y_ind = trim_by_lag_y(series, config.plan.k_y);

  double psi4 = 0.0;
  Vec3 s_mean{0.0, 0.0, 0.0};
  for (std::size_t t = 1; t < n; ++t) {
    double psi = redescend_weight(path.residuals[t], c, config.redescender);
    if (!y_ind.empty() && y_ind[t] == 0) psi = 0.0;
    psi4 += psi * psi * psi * psi;
    for (int i = 0; i < 3; ++i) s_mean[i] += path.s[t][i];
  }
  const double mm = static_cast<double>(m);
  psi4 /= mm;
  for (int i = 0; i < 3; ++i) s_mean[i] /= mm;

  const double denom = psi4 - 1.0;
  if (!(denom > 0.0))
    throw numerical_rank_error(
        "mnwm_scale: fourth-moment plug-in is not above one");

  Mat3 centered_cov = Mat3::zero();
  for (std::size_t t = 1; t < n; ++t) {
    Vec3 v{path.s[t][0] - s_mean[0], path.s[t][1] - s_mean[1],
           path.s[t][2] - s_mean[2]};
    centered_cov.add_outer(v, 1.0);
  }
  centered_cov.scale(1.0 / mm);

  ScaleEstimate out;
  out.denominator = denom;
  out.v_hat = centered_cov;
  out.v_hat.scale(mm / denom);
  const InversionResult inv = invert_spd(out.v_hat);
  out.cov_theta = inv.inverse;
  out.floored = inv.floored;
  for (int i = 0; i < 3; ++i)
    out.se[i] = std::sqrt(std::max(0.0, out.cov_theta(i, i)));
  return out;
}

struct WaldResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
};

namespace detail {

/// Solves A x = b for symmetric positive definite A of order j <= 3 by
/// Cholesky; throws invalid_restriction when a pivot collapses.
inline void solve_spd_small(int j, const double a_in[9], const double* b,
                            double* x) {
  double l[9] = {0.0};
  double trace = 0.0;
  for (int i = 0; i < j; ++i) trace += a_in[3 * i + i];
  const double tiny = 1e-14 * std::max(trace, 1e-300);
  for (int i = 0; i < j; ++i) {
    for (int k = 0; k <= i; ++k) {
      double sum = a_in[3 * i + k];
      for (int p = 0; p < k; ++p) sum -= l[3 * i + p] * l[3 * k + p];
      if (i == k) {
        if (!(sum > tiny))
          throw invalid_restriction(
              "wald_test: restriction covariance is rank deficient");
        l[3 * i + i] = std::sqrt(sum);
      } else {
        l[3 * i + k] = sum / l[3 * k + k];
      }
    }
  }
  double ybuf[3];
  for (int i = 0; i < j; ++i) {
    double sum = b[i];
    for (int p = 0; p < i; ++p) sum -= l[3 * i + p] * ybuf[p];
    ybuf[i] = sum / l[3 * i + i];
  }
  for (int i = j - 1; i >= 0; --i) {
    double sum = ybuf[i];
    for (int p = i + 1; p < j; ++p) sum -= l[3 * p + i] * x[p];
    x[i] = sum / l[3 * i + i];
  }
}

} // namespace detail

/// Wald statistic for restrictions R(theta) = 0 with Jacobian rows d_rows:
///   W = R' (D cov D')^{-1} R  ~  chi2(J) under the null.
/// `restriction_values` holds R(theta_hat); both inputs have J entries,
/// 1 <= J <= 3.
inline WaldResult wald_test(const Mat3& cov_theta,
                            std::span<const double> restriction_values,
                            std::span<const Vec3> d_rows) {
  const std::size_t j = restriction_values.size();
  if (j < 1 || j > 3)
    throw invalid_restriction("wald_test: need 1 to 3 restrictions");
  if (d_rows.size() != j)
    throw invalid_restriction("wald_test: Jacobian row count mismatch");

  // A = D cov D'
  double a[9] = {0.0};
  for (std::size_t r = 0; r < j; ++r) {
    const Vec3 cd = cov_theta.apply(d_rows[r]);
    for (std::size_t s = 0; s <= r; ++s) {
      double v = d_rows[s][0] * cd[0] + d_rows[s][1] * cd[1] +
                 d_rows[s][2] * cd[2];
      a[3 * r + s] = v;
      a[3 * s + r] = v;
    }
  }
  double x[3] = {0.0};
  detail::solve_spd_small(static_cast<int>(j), a, restriction_values.data(),
                          x);
  WaldResult out;
  out.df = static_cast<int>(j);
  for (std::size_t r = 0; r < j; ++r) out.statistic += restriction_values[r] * x[r];
  out.statistic = std::max(0.0, out.statistic);
  out.p_value = 1.0 - chi2_cdf(out.statistic, out.df);
  return out;
}

/// One-coordinate restriction theta[coord] = value; with J = 1 the Wald
/// statistic is the squared t-ratio (theta_hat - value)^2 / cov[coord,coord].
inline WaldResult wald_coordinate_test(const GarchParams& theta_hat,
                                       const Mat3& cov_theta, int coord,
                                       double value) {
  if (coord < 0 || coord > 2)
    throw invalid_restriction("wald_coordinate_test: coordinate out of range");
  const std::array<double, 3> th = theta_hat.as_array();
  const double r = th[coord] - value;
  Vec3 d{0.0, 0.0, 0.0};
  d[coord] = 1.0;
  const std::array<double, 1> rv{r};
  const std::array<Vec3, 1> dr{d};
  return wald_test(cov_theta, rv, dr);
}

struct KsResult {
  double statistic = 0.0;  ///< sup-distance between the EDF and Phi
  double ratio = 0.0;      ///< statistic / (1.358 / sqrt(R)); > 1 rejects at 5%
};

/// Kolmogorov-Smirnov distance between the standardized values
/// (centered at the sample mean, scaled by the 1/R-denominator standard
/// deviation) and the standard normal CDF, reported relative to the
/// 5% critical value 1.358/sqrt(R).
inline KsResult ks_normality(std::span<const double> values) {
  const std::size_t r = values.size();
  if (r < 2) throw invalid_input("ks_normality: need at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(r);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(r);
  if (!(var > 0.0)) throw invalid_data("ks_normality: zero variance");
  const double sd = std::sqrt(var);

  std::vector<double> z(values.begin(), values.end());
  for (double& v : z) v = (v - mean) / sd;
  std::sort(z.begin(), z.end());

  double sup = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double cdf = normal_cdf(z[i]);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(r);
    const double lo = static_cast<double>(i) / static_cast<double>(r);
    sup = std::max(sup, std::max(std::fabs(hi - cdf), std::fabs(cdf - lo)));
  }
  KsResult out;
  out.statistic = sup;
  out.ratio = sup / (1.358 / std::sqrt(static_cast<double>(r)));
  return out;
}

/// Convergence-rate orders for the tail-trimmed estimator against the
/// untrimmed quasi-likelihood benchmark when the error tail index is
/// kappa. For kappa in (2,4) trimming sacrifices a slowly-varying factor
/// of root-n while the untrimmed estimator decays to n^{1-2/kappa}.
struct RateComparison {
  double trimmed_rate = 0.0;    ///< n^{1/2} (k/n)^{2/kappa - 1/2} branch
  double untrimmed_rate = 0.0;  ///< n^{1 - 2/kappa}, capped at n^{1/2}
  double advantage = 0.0;       ///< trimmed / untrimmed
};

inline RateComparison convergence_rates(double kappa, std::size_t n,
                                        std::size_t k) {
  if (!(kappa > 2.0)) throw invalid_input("convergence_rates: kappa <= 2");
  if (n < 2 || k < 1 || k >= n)
    throw invalid_input("convergence_rates: need 1 <= k < n, n >= 2");
  const double nn = static_cast<double>(n);
  const double root_n = std::sqrt(nn);
  RateComparison out;
  if (kappa > 4.0) {
    out.trimmed_rate = root_n;
    out.untrimmed_rate = root_n;
  } else if (kappa == 4.0) {
    out.trimmed_rate = std::sqrt(nn / std::log(nn));
    out.untrimmed_rate = root_n;
  } else {
    out.trimmed_rate =
        root_n * std::pow(static_cast<double>(k) / nn, 2.0 / kappa - 0.5);
    out.untrimmed_rate = std::pow(nn, 1.0 - 2.0 / kappa);
  }
  out.advantage = out.trimmed_rate / out.untrimmed_rate;
  return out;
}

} // namespace tailgarch
