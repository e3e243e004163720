#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailgarch/common.hpp"
#include "tailgarch/model.hpp"
#include "tailgarch/optimize.hpp"
#include "tailgarch/params.hpp"
#include "tailgarch/redescender.hpp"
#include "tailgarch/trimming.hpp"

namespace tailgarch {

/// The estimator families. Acronyms follow the criteria they minimize:
/// Qml      Gaussian quasi-likelihood,
/// Qmttl    tail-trimmed Gaussian quasi-likelihood,
/// LogLad   least absolute deviations on log y_t^2,
/// Wlqml    Laplace quasi-likelihood with tail-dampening data weights,
/// Pqml     polynomial (log-transform) quasi-likelihood with index theta,
/// Pqmttl   Pqml trimmed by a bounded error transform,
/// Mnwm     method of moments with redescended, centered squared errors.
enum class EstimatorFamily { Qml, Qmttl, LogLad, Wlqml, Pqml, Pqmttl, Mnwm };

inline const char* family_token(EstimatorFamily family) {
  switch (family) {
    case EstimatorFamily::Qml: return "qml";
    case EstimatorFamily::Qmttl: return "qmttl";
    case EstimatorFamily::LogLad: return "log-lad";
    case EstimatorFamily::Wlqml: return "wlqml";
    case EstimatorFamily::Pqml: return "pqml";
    case EstimatorFamily::Pqmttl: return "pqmttl";
    case EstimatorFamily::Mnwm: return "mnwm";
  }
  return "unknown";
}

/// Everything a fit routine needs besides the data. An all-zero TrimPlan
/// disables trimming entirely, so qmttl_fit reduces to qml_fit and
/// pqmttl_fit to pqml_fit.
struct FitConfig {
  TrimPlan plan;
  Redescender redescender = Redescender::simple_trim();
  double pqml_index = 3.5;  ///< polynomial criterion index, > 1
  OptimizerConfig optimizer;
  /// Explicit optimizer start; when absent, non-Qml fits warm-start from a
  /// quick Gaussian quasi-likelihood fit.
  std::optional<GarchParams> theta_init;
  bool use_y_trim = true;  ///< honor plan.k_y (lagged-|y| indicators)
};

struct FitResult {
  GarchParams theta_hat{kIota, kIota, kIota};
  double criterion_value = 0.0;
  TrimDiagnostics trim;  ///< thresholds/counts at theta_hat (trimming fits)
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_trace;
  std::size_t dropped_observations = 0;  ///< LogLad: zero returns skipped
};

namespace detail {

inline double sample_variance(std::span<const double> y) {
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  return var / static_cast<double>(n);
}

inline std::size_t default_tail_count(std::size_t n, double lambda = 0.025) {
  return std::max<std::size_t>(
      1, round_half_up(lambda * static_cast<double>(n) /
                       std::log(static_cast<double>(n))));
}

/// Shared criterion state: data-only quantities are computed once at
/// construction, per-theta buffers are reused across evaluations.
struct CriterionEngine {
  EstimatorFamily family;
  std::vector<double> y;
  TrimPlan plan;          ///< error/lag trim (Qmttl)
  TrimPlan u_plan;        ///< bounded-transform trim (Pqmttl)
  double pqml_index = 3.5;
  Redescender redescender = Redescender::simple_trim();
  std::size_t moment_tail_count = 0;  ///< Mnwm |error| threshold order

  std::vector<std::uint8_t> y_indicators;  ///< empty means all ones
  std::size_t trimmed_y_count = 0;
  std::vector<double> weights;  ///< Wlqml observation weights
  std::size_t dropped = 0;      ///< LogLad zero returns in t = 2..n

  // scratch reused every evaluation
  std::vector<double> h, cent, ratio, u_buf, sort_buf, psi2;
  std::vector<Vec3> dh_buf;
  std::vector<std::uint8_t> err_ind;
  TrimWorkspace workspace;

  CriterionEngine(EstimatorFamily family_, std::span<const double> series,
                  const FitConfig& config)
      : family(family_),
        y(series.begin(), series.end()),
        plan(config.plan),
        pqml_index(config.pqml_index),
        redescender(config.redescender) {
    const std::size_t n = y.size();
    if (n < 2) throw invalid_input("fit: series length < 2");
    for (double v : y) {
      if (!std::isfinite(v))
        throw invalid_input("fit: non-finite observation in series");
    }

    if (config.use_y_trim && plan.k_y > 0 &&
        (family == EstimatorFamily::Qmttl ||
         family == EstimatorFamily::Mnwm)) {
      y_indicators = trim_by_lag_y(y, plan.k_y);
      for (std::uint8_t ind : y_indicators)
        if (ind == 0) ++trimmed_y_count;
    }

    switch (family) {
      case EstimatorFamily::Qml:
        plan = TrimPlan::none();
        y_indicators.clear();
        trimmed_y_count = 0;
        break;
      case EstimatorFamily::Qmttl:
        if (plan.any_error_trim() && n - 1 <= plan.k1 + plan.k2)
          throw invalid_config("qmttl: series too short for the fractiles");
        break;
      case EstimatorFamily::LogLad: {
        for (std::size_t t = 1; t < n; ++t)
          if (y[t] == 0.0) ++dropped;
        if (10 * dropped > n - 1)
          throw invalid_data("log-lad: more than 10% zero returns (" +
                             std::to_string(dropped) + " of " +
                             std::to_string(n - 1) + ")");
        break;
      }
      case EstimatorFamily::Wlqml:
        build_wlqml_weights();
        break;
      case EstimatorFamily::Pqml:
      case EstimatorFamily::Pqmttl: {
        if (!(pqml_index > 1.0))
          throw invalid_config("pqml: index must exceed 1");
        if (family == EstimatorFamily::Pqmttl) {
          u_plan = resolve_u_plan(n, config.plan);
          if (u_plan.any_error_trim() && n - 1 <= u_plan.k1 + u_plan.k2)
            throw invalid_config("pqmttl: series too short for the fractiles");
        }
        break;
      }
      case EstimatorFamily::Mnwm: {
        moment_tail_count = plan.k2 > 0 ? plan.k2 : default_tail_count(n);
        if (moment_tail_count >= n)
          throw invalid_config("mnwm: tail count must be < n");
        std::size_t nonzero = 0;
        for (double v : y)
          if (v != 0.0) ++nonzero;
        if (nonzero < moment_tail_count)
          throw invalid_data("mnwm: too many zero returns for the threshold");
        break;
      }
    }
  }

  /// The bounded-transform trim counts: the positive-tail count follows the
  /// usual n/ln n fractile and the negative tail is a fixed multiple of it
  /// (1 symmetric, 5 weak, 9 strong). Custom plans pass their counts through.
  static TrimPlan resolve_u_plan(std::size_t n, const TrimPlan& requested) {
    TrimPlan u;
    u.mode = requested.mode;
    u.exclusive = requested.exclusive;
    if (requested.mode == TrimMode::Custom) {
      u.k1 = requested.k1;
      u.k2 = requested.k2;
      return u;
    }
    u.k2 = default_tail_count(n);
    switch (requested.mode) {
      case TrimMode::StrongAsym: u.k1 = 9 * u.k2; break;
      case TrimMode::WeakAsym: u.k1 = 5 * u.k2; break;
      case TrimMode::Symmetric: u.k1 = u.k2; break;
      case TrimMode::Custom: break;
    }
    return u;
  }

  /// Data weights that downweight observations preceded by extreme values:
  /// with C the (0.10 n)-th largest |y| and lags i = 1..t-1,
  ///   w_t = (max{1, C^-1 sum_i i^-9 |y_{t-i}| 1(|y_{t-i}| > C)})^-4.
  void build_wlqml_weights() {
    const std::size_t n = y.size();
    sort_buf.resize(n);
    for (std::size_t i = 0; i < n; ++i) sort_buf[i] = std::fabs(y[i]);
    const std::size_t k_c = std::min<std::size_t>(
        n, std::max<std::size_t>(1, round_half_up(0.10 * static_cast<double>(n))));
    std::nth_element(sort_buf.begin(), sort_buf.begin() + (k_c - 1),
                     sort_buf.end(), std::greater<double>());
    const double c = sort_buf[k_c - 1];
    if (!(c > 0.0))
      throw invalid_data("wlqml: weight threshold is zero (degenerate series)");

    weights.assign(n, 1.0);
    for (std::size_t t = 1; t < n; ++t) {
      double acc = 0.0;
      for (std::size_t i = 1; i <= t; ++i) {
        const double lag = std::fabs(y[t - i]);
        if (lag > c)
          acc += std::pow(static_cast<double>(i), -9.0) * lag;
      }
      const double base = std::max(1.0, acc / c);
      weights[t] = std::pow(base, -4.0);
    }
  }

  double eval(const std::array<double, 3>& x,
              TrimDiagnostics* diagnostics = nullptr) {
    const GarchParams p = GarchParams::projected(x[0], x[1], x[2]);
    switch (family) {
      case EstimatorFamily::Qml:
      case EstimatorFamily::Qmttl:
        return eval_gaussian(p, diagnostics);
      case EstimatorFamily::LogLad:
        return eval_log_lad(p);
      case EstimatorFamily::Wlqml:
        return eval_wlqml(p);
      case EstimatorFamily::Pqml:
      case EstimatorFamily::Pqmttl:
        return eval_polynomial(p, diagnostics);
      case EstimatorFamily::Mnwm:
        return eval_moment(p, diagnostics);
    }
    throw invalid_config("eval: unknown estimator family");
  }

  double eval_gaussian(const GarchParams& p, TrimDiagnostics* diagnostics) {
    const std::size_t n = y.size();
    iterate_volatility_core(p, y, h, cent);
    const bool trim_err = plan.any_error_trim();
    if (trim_err) {
      trim_indicators_into(std::span<const double>(cent.data() + 1, n - 1),
                           plan, err_ind, diagnostics, workspace);
    } else if (diagnostics) {
      *diagnostics = TrimDiagnostics{};
    }
    if (diagnostics) diagnostics->trimmed_y = trimmed_y_count;

    double sum = 0.0;
    const bool lag_trim = !y_indicators.empty();
    for (std::size_t t = 1; t < n; ++t) {
      if (trim_err && err_ind[t - 1] == 0) continue;
      if (lag_trim && y_indicators[t] == 0) continue;
      sum += std::log(h[t]) + y[t] * y[t] / h[t];
    }
    return sum / static_cast<double>(n);
  }

  double eval_log_lad(const GarchParams& p) {
    const std::size_t n = y.size();
    iterate_volatility_core(p, y, h, cent);
    double sum = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      if (y[t] == 0.0) continue;
      sum += std::fabs(std::log(y[t] * y[t]) - std::log(h[t]));
    }
    return sum / static_cast<double>(n);
  }

  double eval_wlqml(const GarchParams& p) {
    const std::size_t n = y.size();
    iterate_volatility_core(p, y, h, cent);
    double sum = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      sum += (0.5 * std::log(h[t]) + std::fabs(y[t]) / std::sqrt(h[t])) *
             weights[t];
    }
    return sum / static_cast<double>(n);
  }

  double eval_polynomial(const GarchParams& p, TrimDiagnostics* diagnostics) {
    const std::size_t n = y.size();
    iterate_volatility_core(p, y, h, cent);
    ratio.resize(n);
    for (std::size_t t = 1; t < n; ++t)
      ratio[t] = std::fabs(y[t]) / std::sqrt(h[t]);

    const bool trim = family == EstimatorFamily::Pqmttl &&
                      u_plan.any_error_trim();
    if (trim) {
      u_buf.resize(n - 1);
      for (std::size_t t = 1; t < n; ++t)
        u_buf[t - 1] = ratio[t] / (1.0 + ratio[t]) - 1.0 / pqml_index;
      trim_indicators_into(u_buf, u_plan, err_ind, diagnostics, workspace);
    } else if (diagnostics) {
      *diagnostics = TrimDiagnostics{};
    }

    double sum = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      if (trim && err_ind[t - 1] == 0) continue;
      sum += 0.5 * std::log(h[t]) + pqml_index * std::log1p(ratio[t]);
    }
    return sum / static_cast<double>(n);
  }

  /// || (1/n) sum_t (psi_t^2 - mean psi^2) s_t ||^2 with psi the redescended
  /// residual at the k-th largest |residual| threshold, recomputed at theta.
  double eval_moment(const GarchParams& p, TrimDiagnostics* diagnostics) {
    const std::size_t n = y.size();
    h.resize(n);
    dh_buf.resize(n);
    ratio.resize(n);

    h[0] = p.omega;
    dh_buf[0] = {1.0, 0.0, 0.0};
    for (std::size_t t = 1; t < n; ++t) {
      const double y2 = y[t - 1] * y[t - 1];
      h[t] = p.omega + p.alpha * y2 + p.beta * h[t - 1];
      dh_buf[t] = {1.0 + p.beta * dh_buf[t - 1][0],
                   y2 + p.beta * dh_buf[t - 1][1],
                   h[t - 1] + p.beta * dh_buf[t - 1][2]};
    }
    for (std::size_t t = 0; t < n; ++t)
      ratio[t] = y[t] / std::sqrt(h[t]);  // residual eps_t(theta)

    sort_buf.resize(n);
    for (std::size_t t = 0; t < n; ++t) sort_buf[t] = std::fabs(ratio[t]);
    std::nth_element(sort_buf.begin(),
                     sort_buf.begin() + (moment_tail_count - 1),
                     sort_buf.end(), std::greater<double>());
    const double c = sort_buf[moment_tail_count - 1];
    if (!(c > 0.0))
      throw invalid_data("mnwm: residual threshold collapsed to zero");

    psi2.resize(n);
    const bool lag_trim = !y_indicators.empty();
    double mean2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double psi = redescend_weight(ratio[t], c, redescender);
      double p2 = psi * psi;
      if (lag_trim && y_indicators[t] == 0) p2 = 0.0;
      psi2[t] = p2;
      mean2 += p2;
    }
    mean2 /= static_cast<double>(n);

    Vec3 g{0.0, 0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double w = psi2[t] - mean2;
      const double inv_h = 1.0 / h[t];
      g[0] += w * dh_buf[t][0] * inv_h;
      g[1] += w * dh_buf[t][1] * inv_h;
      g[2] += w * dh_buf[t][2] * inv_h;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    g[0] *= inv_n;
    g[1] *= inv_n;
    g[2] *= inv_n;

    if (diagnostics) {
      TrimDiagnostics diag;
      diag.neg_threshold = -c;
      diag.pos_threshold = c;
      for (std::size_t t = 0; t < n; ++t) {
        if (ratio[t] < -c) ++diag.trimmed_neg;
        if (ratio[t] > c) ++diag.trimmed_pos;
      }
      diag.trimmed_neg_closed = diag.trimmed_neg;
      diag.trimmed_pos_closed = diag.trimmed_pos;
      diag.trimmed_y = trimmed_y_count;
      *diagnostics = diag;
    }
    return g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
  }
};

} // namespace detail

/// A reusable criterion closure over one series. Copies share scratch
/// buffers, so a Criterion (and the std::function wrapping it) must not be
/// evaluated from two threads at once.
class Criterion {
 public:
  Criterion(EstimatorFamily family, std::span<const double> series,
            const FitConfig& config = {})
      : engine_(std::make_shared<detail::CriterionEngine>(family, series,
                                                          config)) {}

  double operator()(const std::array<double, 3>& theta) const {
    return engine_->eval(theta, nullptr);
  }

  double evaluate(const std::array<double, 3>& theta,
                  TrimDiagnostics* diagnostics = nullptr) const {
    return engine_->eval(theta, diagnostics);
  }

  std::size_t dropped_observations() const { return engine_->dropped; }

 private:
  std::shared_ptr<detail::CriterionEngine> engine_;
};

inline double evaluate_criterion(EstimatorFamily family,
                                 std::span<const double> series,
                                 const std::array<double, 3>& theta,
                                 const FitConfig& config = {}) {
  return Criterion(family, series, config).evaluate(theta);
}

/// Gradient of the tail-trimmed Gaussian criterion with the trimming
/// indicators held fixed at theta (the almost-sure derivative):
///   (1/n) sum_{t=2..n} (1 - eps_t^2) s_t * indicators.
/// Matches finite differences whenever no error sits at a trim threshold.
inline Vec3 qmttl_criterion_gradient(std::span<const double> series,
                                     const GarchParams& params,
                                     const TrimPlan& plan,
                                     bool use_y_trim = true) {
  const std::size_t n = series.size();
  const VolPath path = iterate_volatility(params, series);

  std::vector<std::uint8_t> err_ind;
  if (plan.any_error_trim()) {
    err_ind = trim_indicators(
        std::span<const double>(path.centered.data() + 1, n - 1), plan);
  }
  std::vector<std::uint8_t> y_ind;
  if (use_y_trim && plan.k_y > 0) y_ind = trim_by_lag_y(series, plan.k_y);

  Vec3 g{0.0, 0.0, 0.0};
  for (std::size_t t = 1; t < n; ++t) {
    if (!err_ind.empty() && err_ind[t - 1] == 0) continue;
    if (!y_ind.empty() && y_ind[t] == 0) continue;
    const double w = -path.centered[t];  // 1 - eps^2
    g[0] += w * path.s[t][0];
    g[1] += w * path.s[t][1];
    g[2] += w * path.s[t][2];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  g[0] *= inv_n;
  g[1] *= inv_n;
  g[2] *= inv_n;
  return g;
}

namespace detail {

inline std::array<double, 3> warm_start(std::span<const double> y) {
  const double var = sample_variance(y);
  if (!(var > 0.0))
    throw invalid_data("fit: series has zero sample variance");
  const double omega0 =
      std::clamp(0.1 * var, kIota, kOmegaMax);
  return {omega0, 0.05, 0.85};
}

inline const Box& parameter_box() {
  static const Box box{{kIota, kIota, kIota},
                       {kOmegaMax, 1.0 - kIota, 1.0 - kIota}};
  return box;
}

/// Start resolution: an explicit theta_init wins; otherwise a quick
/// Gaussian quasi-likelihood fit anchors the search for every family but
/// Qml itself, which starts from the moment-matched warm point directly.
/// A trimming family whose plan trims nothing IS the Gaussian criterion,
/// so it takes the Qml path; this keeps the reduction identity exact
/// (identical start, identical criterion, identical fit).
inline std::array<double, 3> resolve_start(EstimatorFamily family,
                                           std::span<const double> series,
                                           const FitConfig& config) {
  if (config.theta_init) return config.theta_init->as_array();
  const std::array<double, 3> warm = warm_start(series);
  const bool reduces_to_qml =
      family == EstimatorFamily::Qmttl && !config.plan.any_error_trim() &&
      (!config.use_y_trim || config.plan.k_y == 0);
  if (family == EstimatorFamily::Qml || reduces_to_qml) return warm;

  Criterion qml(EstimatorFamily::Qml, series, FitConfig{});
  OptimizerConfig quick;
  quick.kind = OptimizerKind::NelderMead;
  quick.restarts = 1;
  quick.tol = 1e-6;
  quick.max_iterations = 300;
  quick.seed = config.optimizer.seed;
  const OptimResult r = minimize(qml, warm, parameter_box(), quick);
  return r.x;
}

inline FitResult fit_family(EstimatorFamily family,
                            std::span<const double> series,
                            const FitConfig& config) {
  Criterion criterion(family, series, config);
  const std::array<double, 3> start = resolve_start(family, series, config);

  // The Gaussian-criterion families share an exact almost-sure gradient
  // (the untrimmed case is the plan-free special case); the gradient-based
  // optimizer kinds consume it instead of finite differences.
  std::function<std::array<double, 3>(const std::array<double, 3>&)> grad;
  const bool gradient_kind =
      config.optimizer.kind == OptimizerKind::GradientDescentWithProjection ||
      config.optimizer.kind == OptimizerKind::DampedNewton;
  if (gradient_kind &&
      (family == EstimatorFamily::Qmttl || family == EstimatorFamily::Qml)) {
    const TrimPlan plan =
        family == EstimatorFamily::Qml ? TrimPlan::none() : config.plan;
    const bool use_y = family == EstimatorFamily::Qmttl && config.use_y_trim;
    std::vector<double> data(series.begin(), series.end());
    grad = [plan, use_y, data](const std::array<double, 3>& x) {
      const GarchParams p = GarchParams::projected(x[0], x[1], x[2]);
      return qmttl_criterion_gradient(data, p, plan, use_y);
    };
  }

  const OptimResult r =
      minimize(criterion, start, parameter_box(), config.optimizer, grad);

  FitResult out;
  out.theta_hat = GarchParams::projected(r.x[0], r.x[1], r.x[2]);
  out.criterion_value = criterion.evaluate(r.x, &out.trim);
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.objective_trace = r.trace;
  out.dropped_observations = criterion.dropped_observations();
  return out;
}

} // namespace detail

/// Gaussian quasi-maximum likelihood (no trimming).
inline FitResult qml_fit(std::span<const double> series,
                         const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::Qml, series, config);
}

/// Tail-trimmed Gaussian quasi-maximum likelihood. The plan's error
/// indicators are recomputed from the order statistics of the centered
/// errors at every evaluation point; an all-zero plan reproduces qml_fit.
inline FitResult qmttl_fit(std::span<const double> series,
                           const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::Qmttl, series, config);
}

/// Least absolute deviations on log y_t^2. Zero returns are skipped; more
/// than 10% of them raises invalid_data.
inline FitResult log_lad_fit(std::span<const double> series,
                             const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::LogLad, series, config);
}

/// Laplace quasi-maximum likelihood with tail-dampening observation
/// weights (computed once from the data).
inline FitResult wlqml_fit(std::span<const double> series,
                           const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::Wlqml, series, config);
}

/// Polynomial quasi-maximum likelihood with index config.pqml_index.
inline FitResult pqml_fit(std::span<const double> series,
                          const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::Pqml, series, config);
}

/// Tail-trimmed polynomial quasi-maximum likelihood: the Pqml summands are
/// trimmed by order statistics of u_t = |eps_t|/(1+|eps_t|) - 1/index.
inline FitResult pqmttl_fit(std::span<const double> series,
                            const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::Pqmttl, series, config);
}

/// Method of moments on redescended squared residuals: minimizes the
/// squared norm of (1/n) sum (psi_t^2 - mean psi^2) s_t, with the
/// redescender threshold set to the k-th largest |residual| at each theta
/// (k = plan.k2 when set, else the n/ln n fractile).
inline FitResult mnwm_fit(std::span<const double> series,
                          const FitConfig& config = {}) {
  return detail::fit_family(EstimatorFamily::Mnwm, series, config);
}

inline FitResult fit(EstimatorFamily family, std::span<const double> series,
                     const FitConfig& config = {}) {
  return detail::fit_family(family, series, config);
}

} // namespace tailgarch
