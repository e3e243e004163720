#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tailgarch/common.hpp"
#include "tailgarch/error_dist.hpp"
#include "tailgarch/params.hpp"
#include "tailgarch/rng.hpp"

namespace tailgarch {

using Vec3 = std::array<double, 3>;

/// Feasible volatility path and its derivatives under the recursion
///   h_1 = omega,  h_t = omega + alpha*y_{t-1}^2 + beta*h_{t-1},
///   dh_1 = [1,0,0]',  dh_t = [1, y_{t-1}^2, h_{t-1}]' + beta*dh_{t-1}.
/// Fields are aligned with the input series: index t-1 holds time t.
struct VolPath {
  std::vector<double> h;        ///< h_t(theta) > 0
  std::vector<Vec3> dh;         ///< dh_t/dtheta
  std::vector<Vec3> s;          ///< score s_t = dh_t / h_t
  std::vector<double> residuals;  ///< eps_t(theta) = y_t / sqrt(h_t)
  std::vector<double> centered;   ///< E_t(theta) = eps_t^2 - 1
};

/// Volatility recursion without derivatives; the criterion hot path.
/// Writes h_t and eps_t^2 - 1 into preallocated buffers of length n.
inline void iterate_volatility_core(const GarchParams& params,
                                    std::span<const double> series,
                                    std::vector<double>& h,
                                    std::vector<double>& centered) {
  const std::size_t n = series.size();
  h.resize(n);
  centered.resize(n);
  double prev = params.omega;
  h[0] = prev;
  centered[0] = series[0] * series[0] / prev - 1.0;
  for (std::size_t t = 1; t < n; ++t) {
    prev = params.omega + params.alpha * series[t - 1] * series[t - 1] +
           params.beta * prev;
    h[t] = prev;
    centered[t] = series[t] * series[t] / prev - 1.0;
  }
}

/// Full path with analytic derivatives, scores, residuals and centered
/// errors. Throws invalid_input on series shorter than 2 or non-finite data.
inline VolPath iterate_volatility(const GarchParams& params,
                                  std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) throw invalid_input("iterate_volatility: series length < 2");
  for (double y : series) {
    if (!std::isfinite(y))
      throw invalid_input("iterate_volatility: non-finite observation");
  }

  VolPath path;
  path.h.resize(n);
  path.dh.resize(n);
  path.s.resize(n);
  path.residuals.resize(n);
  path.centered.resize(n);

  path.h[0] = params.omega;
  path.dh[0] = {1.0, 0.0, 0.0};
  for (std::size_t t = 1; t < n; ++t) {
    const double y2 = series[t - 1] * series[t - 1];
    path.h[t] = params.omega + params.alpha * y2 + params.beta * path.h[t - 1];
    path.dh[t] = {1.0 + params.beta * path.dh[t - 1][0],
                  y2 + params.beta * path.dh[t - 1][1],
                  path.h[t - 1] + params.beta * path.dh[t - 1][2]};
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double ht = path.h[t];
    path.s[t] = {path.dh[t][0] / ht, path.dh[t][1] / ht, path.dh[t][2] / ht};
    path.residuals[t] = series[t] / std::sqrt(ht);
    path.centered[t] = path.residuals[t] * path.residuals[t] - 1.0;
  }
  return path;
}

/// The score sequence s_t = dh_t/h_t, exposed for the estimators.
inline const std::vector<Vec3>& score_path(const VolPath& path) {
  return path.s;
}

/// Simulation controls. sigma1_sq < 0 means "start at omega" (the
/// convention used by the experiment designs).
struct SimOptions {
  std::size_t burn_multiple = 19;  ///< draw (burn_multiple+1)*n, keep last n
  double sigma1_sq = -1.0;
};

/// Simulates y_1..y_n from the GARCH(1,1) recursion after a burn-in of
/// burn_multiple*n observations. Deterministic given seed. Nonstationary
/// parameter points (alpha+beta >= 1) simulate normally; callers can check
/// params.is_nonstationary() to warn.
inline std::vector<double> simulate_garch(const GarchParams& params,
                                          const ErrorDist& dist,
                                          std::size_t n, std::uint64_t seed,
                                          const SimOptions& options = {}) {
  if (n < 2) throw invalid_input("simulate_garch: n < 2");
  const double scale = dist.scale_factor();
  const std::size_t total = (options.burn_multiple + 1) * n;
  Rng rng(seed);

  std::vector<double> out(n);
  double sigma_sq =
      options.sigma1_sq >= 0.0 ? options.sigma1_sq : params.omega;
  const std::size_t skip = total - n;
  for (std::size_t t = 0; t < total; ++t) {
    const double eps = dist.draw_raw(rng) * scale;
    const double y = std::sqrt(sigma_sq) * eps;
    if (t >= skip) out[t - skip] = y;
    sigma_sq = params.omega + params.alpha * y * y + params.beta * sigma_sq;
  }
  return out;
}

} // namespace tailgarch
