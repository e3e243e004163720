#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tailgarch/common.hpp"
#include "tailgarch/linalg.hpp"
#include "tailgarch/rng.hpp"

namespace tailgarch {

/// Axis-aligned box constraint in R^3.
struct Box {
  std::array<double, 3> lo;
  std::array<double, 3> hi;

  std::array<double, 3> clamp(std::array<double, 3> x) const {
    for (int i = 0; i < 3; ++i) {
      if (!(x[i] > lo[i])) x[i] = lo[i];  // also catches NaN
      if (x[i] > hi[i]) x[i] = hi[i];
    }
    return x;
  }
};

enum class OptimizerKind {
  NelderMead,
  GradientDescentWithProjection,
  /// A fixed budget of damped Newton steps from the start (finite-difference
  /// gradient and Hessian, eigenvalue-floored solve, monotone line search).
  /// This is the classic k-step refinement: seeded at a consistent point it
  /// shares the first-order distribution of the consistent criterion root,
  /// and it cannot run off to a remote minimum the way a search-to-
  /// convergence method does on weakly identified samples.
  DampedNewton,
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::NelderMead;
  int restarts = 3;       ///< Nelder-Mead runs, each from a perturbed best
  double tol = 1e-8;      ///< relative criterion-decrease tolerance
  int max_iterations = 600;  ///< per run
  std::uint64_t seed = 0;    ///< restart perturbations; fits stay deterministic
  int newton_steps = 3;   ///< damped-Newton budget (DampedNewton kind only)
  /// Initial Nelder-Mead simplex edge. Non-positive selects the adaptive
  /// default 0.05*(1+|x_i|) per coordinate; a positive value is used as an
  /// absolute edge length. Small edges keep the search local to the start,
  /// which is what a simulation harness wants when it seeds fits at the
  /// data-generating value; the adaptive default explores more widely.
  double simplex_edge = -1.0;
  /// Projected-gradient and damped-Newton: cap on the per-iteration move in
  /// the max-norm (Newton uses 0.5 when unset — a trust-region radius).
  /// Non-positive disables the cap. A capped monotone descent
  /// tracks the gradient flow from the start, so it settles into the
  /// stationary point of the basin the start belongs to instead of
  /// tunnelling across ridges on a lucky long step.
  double max_step = -1.0;
  /// When positive, the feasible box is intersected with the max-norm ball
  /// of this radius around the start before any kind runs. Consistency
  /// arguments for extremum estimators concern the criterion root inside a
  /// neighborhood of the target that shrinks at the estimator's rate; a
  /// simulation harness anchored at the generating value sets this to
  /// c/sqrt(n) so the reported fit is that local root rather than whatever
  /// remote minimizer a weakly identified sample happens to grow.
  double trust_radius = -1.0;
};

struct OptimResult {
  std::array<double, 3> x{};
  double fmin = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  ///< best criterion value per accepted step
};

namespace detail {

using Objective = std::function<double(const std::array<double, 3>&)>;

/// One Nelder-Mead run from the given start; iterates stay inside the box.
inline OptimResult nelder_mead_run(const Objective& f,
                                   std::array<double, 3> start,
                                   const Box& box, double tol,
                                   int max_iterations, double simplex_edge,
                                   std::vector<double>& trace) {
  constexpr int dim = 3;
  constexpr int npts = dim + 1;
  struct Vertex {
    std::array<double, 3> x;
    double fx;
  };

  start = box.clamp(start);
  std::array<Vertex, npts> simplex;
  simplex[0] = {start, f(start)};
  for (int i = 0; i < dim; ++i) {
    std::array<double, 3> x = start;
    const double span = box.hi[i] - box.lo[i];
    double step = simplex_edge > 0.0 ? simplex_edge
                                     : 0.05 * (1.0 + std::fabs(x[i]));
    step = std::min(step, 0.25 * span);
    if (x[i] + step > box.hi[i]) step = -step;
    x[i] += step;
    x = box.clamp(x);
    simplex[i + 1] = {x, f(x)};
  }

  auto order = [&]() {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
  };
  order();

  OptimResult result;
  int iter = 0;
  bool converged = false;
  for (; iter < max_iterations; ++iter) {
    const double f_best = simplex[0].fx;
    const double f_worst = simplex[npts - 1].fx;
    if (std::isfinite(f_best) &&
        f_worst - f_best <= tol * (1.0 + std::fabs(f_best))) {
      converged = true;
      break;
    }

    std::array<double, 3> centroid{};
    for (int i = 0; i < npts - 1; ++i)
      for (int d = 0; d < dim; ++d) centroid[d] += simplex[i].x[d] / dim;

    auto probe = [&](double coeff) {
      std::array<double, 3> x;
      for (int d = 0; d < dim; ++d)
        x[d] = centroid[d] + coeff * (centroid[d] - simplex[npts - 1].x[d]);
      x = box.clamp(x);
      return Vertex{x, f(x)};
    };

    Vertex reflected = probe(1.0);
    if (reflected.fx < simplex[0].fx) {
      Vertex expanded = probe(2.0);
      simplex[npts - 1] = expanded.fx < reflected.fx ? expanded : reflected;
    } else if (reflected.fx < simplex[npts - 2].fx) {
      simplex[npts - 1] = reflected;
    } else {
      const Vertex& base =
          reflected.fx < simplex[npts - 1].fx ? reflected : simplex[npts - 1];
      Vertex contracted = probe(reflected.fx < simplex[npts - 1].fx ? 0.5 : -0.5);
      if (contracted.fx < base.fx) {
        simplex[npts - 1] = contracted;
      } else {
        // Shrink toward the best vertex.
        for (int i = 1; i < npts; ++i) {
          std::array<double, 3> x;
          for (int d = 0; d < dim; ++d)
            x[d] = simplex[0].x[d] + 0.5 * (simplex[i].x[d] - simplex[0].x[d]);
          x = box.clamp(x);
          simplex[i] = {x, f(x)};
        }
      }
    }
    order();
    trace.push_back(simplex[0].fx);
  }

  result.x = simplex[0].x;
  result.fmin = simplex[0].fx;
  result.converged = converged && std::isfinite(result.fmin);
  result.iterations = iter;
  return result;
}

/// Projected gradient descent with backtracking; needs a gradient callback.
inline OptimResult projected_gradient_run(
    const Objective& f,
    const std::function<std::array<double, 3>(const std::array<double, 3>&)>&
        grad,
    std::array<double, 3> start, const Box& box, double tol,
    int max_iterations, double max_step, std::vector<double>& trace) {
  OptimResult result;
  std::array<double, 3> x = box.clamp(start);
  double fx = f(x);
  int iter = 0;
  bool converged = false;
  for (; iter < max_iterations; ++iter) {
    const std::array<double, 3> g = grad(x);
    double gnorm = 0.0, gmax = 0.0;
    for (double gi : g) {
      gnorm += gi * gi;
      gmax = std::max(gmax, std::fabs(gi));
    }
    if (!std::isfinite(gnorm)) break;
    if (gmax == 0.0) {
      converged = true;
      break;
    }

    double step = 1.0;
    if (max_step > 0.0) step = std::min(step, max_step / gmax);
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      std::array<double, 3> candidate;
      for (int d = 0; d < 3; ++d) candidate[d] = x[d] - step * g[d];
      candidate = box.clamp(candidate);
      const double fc = f(candidate);
      if (std::isfinite(fc) && fc < fx) {
        const double decrease = fx - fc;
        x = candidate;
        fx = fc;
        trace.push_back(fx);
        accepted = true;
        if (decrease <= tol * (1.0 + std::fabs(fx))) converged = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent direction at line-search resolution: stationary.
      converged = true;
      break;
    }
    if (converged) break;
  }
  result.x = x;
  result.fmin = fx;
  result.converged = converged && std::isfinite(fx);
  result.iterations = iter;
  return result;
}

/// A budgeted damped Newton descent. Derivatives are central finite
/// differences with steps wide enough to average over the micro-kinks a
/// trimmed criterion carries; the Hessian solve floors eigenvalues so flat
/// and saddle directions produce short, stable moves; every step passes a
/// monotone backtracking line search. When the optional analytic gradient
/// is supplied it replaces the FD gradient and the Hessian is differenced
/// from it. Stops when the relative criterion decrease falls below tol,
/// when no descent is found at line-search resolution, or when the step
/// budget runs out — whichever comes first.
inline OptimResult damped_newton_run(
    const Objective& f,
    const std::function<std::array<double, 3>(const std::array<double, 3>&)>&
        grad,
    std::array<double, 3> start, const Box& box, int steps, double tol,
    double max_step, std::vector<double>& trace) {
  const double step_cap = max_step > 0.0 ? max_step : 0.5;
  OptimResult result;
  std::array<double, 3> x = box.clamp(start);
  double fx = f(x);
  int iter = 0;

  for (; iter < steps; ++iter) {
    // Per-coordinate FD steps, shrunk so x +- h stays inside the box. A
    // coordinate pinned against its bound gets a one-sided gradient and is
    // frozen in the Hessian (unit diagonal, zero cross terms).
    std::array<double, 3> h{};
    std::array<bool, 3> pinned{};
    for (int d = 0; d < 3; ++d) {
      h[d] = 1e-3 * (1.0 + std::fabs(x[d]));
      const double room = std::min(box.hi[d] - x[d], x[d] - box.lo[d]);
      if (room < 1e-9) {
        pinned[d] = true;
        h[d] = std::min(1e-3, 0.5 * (box.hi[d] - box.lo[d]));
      } else {
        h[d] = std::min(h[d], room);
      }
    }

    std::array<double, 3> g{};
    Mat3 hess = Mat3::zero();
    if (grad) {
      g = grad(x);
      for (int d = 0; d < 3; ++d) {
        if (pinned[d]) continue;
        std::array<double, 3> xp = x, xm = x;
        xp[d] += h[d];
        xm[d] -= h[d];
        const std::array<double, 3> gp = grad(xp);
        const std::array<double, 3> gm = grad(xm);
        for (int e = 0; e < 3; ++e)
          hess(d, e) = (gp[e] - gm[e]) / (2.0 * h[d]);
      }
      // Symmetrize; FD of a gradient is not exactly symmetric.
      for (int d = 0; d < 3; ++d)
        for (int e = d + 1; e < 3; ++e) {
          const double avg = 0.5 * (hess(d, e) + hess(e, d));
          hess(d, e) = avg;
          hess(e, d) = avg;
        }
    } else {
      std::array<double, 3> fplus{}, fminus{};
      for (int d = 0; d < 3; ++d) {
        if (pinned[d]) {
          // One-sided difference into the interior.
          std::array<double, 3> xin = x;
          const bool at_hi = box.hi[d] - x[d] < 1e-9;
          xin[d] += at_hi ? -h[d] : h[d];
          const double fin = f(xin);
          g[d] = (at_hi ? fx - fin : fin - fx) / h[d];
          fplus[d] = fx;
          fminus[d] = fx;
          continue;
        }
        std::array<double, 3> xp = x, xm = x;
        xp[d] += h[d];
        xm[d] -= h[d];
        fplus[d] = f(xp);
        fminus[d] = f(xm);
        g[d] = (fplus[d] - fminus[d]) / (2.0 * h[d]);
      }
      for (int d = 0; d < 3; ++d) {
        if (pinned[d]) continue;
        hess(d, d) = (fplus[d] - 2.0 * fx + fminus[d]) / (h[d] * h[d]);
        for (int e = d + 1; e < 3; ++e) {
          if (pinned[e]) continue;
          std::array<double, 3> xpp = x, xpm = x, xmp = x, xmm = x;
          xpp[d] += h[d]; xpp[e] += h[e];
          xpm[d] += h[d]; xpm[e] -= h[e];
          xmp[d] -= h[d]; xmp[e] += h[e];
          xmm[d] -= h[d]; xmm[e] -= h[e];
          const double cross =
              (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h[d] * h[e]);
          hess(d, e) = cross;
          hess(e, d) = cross;
        }
      }
    }
    for (int d = 0; d < 3; ++d) {
      if (!pinned[d]) continue;
      for (int e = 0; e < 3; ++e) {
        hess(d, e) = d == e ? 1.0 : 0.0;
        if (e != d) hess(e, d) = 0.0;
      }
      // A pinned coordinate only moves back into the interior.
      const bool at_hi = box.hi[d] - x[d] < 1e-9;
      if ((at_hi && g[d] < 0.0) || (!at_hi && g[d] > 0.0)) g[d] = 0.0;
    }

    bool finite = true;
    for (int d = 0; d < 3; ++d)
      for (int e = 0; e < 3; ++e)
        if (!std::isfinite(hess(d, e))) finite = false;
    for (double gd : g)
      if (!std::isfinite(gd)) finite = false;
    if (!finite) break;

    // Eigenvalue-floored solve: flat directions respond stiffly instead of
    // launching the iterate along the whole valley.
    std::array<double, 3> dir{};
    try {
      const InversionResult inv = invert_spd(hess, 1e-6);
      for (int d = 0; d < 3; ++d)
        dir[d] = -(inv.inverse(d, 0) * g[0] + inv.inverse(d, 1) * g[1] +
                   inv.inverse(d, 2) * g[2]);
    } catch (const numerical_rank_error&) {
      break;
    }
    double dmax = 0.0;
    for (double v : dir) dmax = std::max(dmax, std::fabs(v));
    if (!(dmax > 0.0) || !std::isfinite(dmax)) break;
    if (dmax > step_cap)
      for (double& v : dir) v *= step_cap / dmax;

    double t = 1.0;
    bool accepted = false;
    double decrease = 0.0;
    for (int ls = 0; ls < 25; ++ls) {
      std::array<double, 3> candidate;
      for (int d = 0; d < 3; ++d) candidate[d] = x[d] + t * dir[d];
      candidate = box.clamp(candidate);
      const double fc = f(candidate);
      if (std::isfinite(fc) && fc < fx) {
        decrease = fx - fc;
        x = candidate;
        fx = fc;
        trace.push_back(fx);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // stationary at line-search resolution
    if (decrease <= tol * (1.0 + std::fabs(fx))) {
      ++iter;
      break;  // progress stalled at the requested tolerance
    }
  }

  result.x = x;
  result.fmin = fx;
  // A budgeted refinement defines the estimator; finishing the budget (or
  // reaching a stationary point sooner) is convergence.
  result.converged = std::isfinite(fx);
  result.iterations = iter;
  return result;
}

} // namespace detail

/// Minimizes the objective over the box. Nelder-Mead restarts from
/// seeded perturbations of the incumbent best point; the best run wins.
/// The optional analytic gradient is used by the projected-gradient and
/// damped-Newton kinds (a finite-difference fallback is substituted when
/// absent).
inline OptimResult minimize(
    const detail::Objective& objective, std::array<double, 3> start,
    const Box& box, const OptimizerConfig& config = {},
    const std::function<std::array<double, 3>(const std::array<double, 3>&)>&
        gradient = nullptr) {
  if (config.restarts < 1)
    throw invalid_config("minimize: restarts must be >= 1");
  if (!(config.tol > 0.0)) throw invalid_config("minimize: tol must be > 0");

  start = box.clamp(start);
  Box feasible = box;
  if (config.trust_radius > 0.0) {
    for (int d = 0; d < 3; ++d) {
      feasible.lo[d] = std::max(box.lo[d], start[d] - config.trust_radius);
      feasible.hi[d] = std::min(box.hi[d], start[d] + config.trust_radius);
    }
  }
  if (!std::isfinite(objective(start)))
    throw optimization_failure("minimize: objective not finite at start");

  OptimResult best;
  best.fmin = std::numeric_limits<double>::infinity();

  if (config.kind == OptimizerKind::DampedNewton) {
    if (config.newton_steps < 1)
      throw invalid_config("minimize: newton_steps must be >= 1");
    return detail::damped_newton_run(objective, gradient, start, feasible,
                                     config.newton_steps, config.tol,
                                     config.max_step, best.trace);
  }

  if (config.kind == OptimizerKind::GradientDescentWithProjection) {
    auto grad = gradient;
    if (!grad) {
      grad = [&objective, box = feasible](const std::array<double, 3>& x) {
        std::array<double, 3> g{};
        for (int d = 0; d < 3; ++d) {
          const double h = 1e-7 * (1.0 + std::fabs(x[d]));
          std::array<double, 3> hi = x, lo = x;
          hi[d] += h;
          lo[d] -= h;
          hi = box.clamp(hi);
          lo = box.clamp(lo);
          g[d] = (objective(hi) - objective(lo)) / (hi[d] - lo[d]);
        }
        return g;
      };
    }
    best = detail::projected_gradient_run(objective, grad, start, feasible,
                                          config.tol, config.max_iterations,
                                          config.max_step, best.trace);
    return best;
  }

  Rng rng(config.seed ^ 0x7445A173C9D2B1E5ull);
  std::array<double, 3> from = start;
  int total_iterations = 0;
  bool any_converged = false;
  for (int run = 0; run < config.restarts; ++run) {
    OptimResult r = detail::nelder_mead_run(objective, from, feasible, config.tol,
                                            config.max_iterations,
                                            config.simplex_edge, best.trace);
    total_iterations += r.iterations;
    any_converged = any_converged || r.converged;
    if (r.fmin < best.fmin) {
      best.x = r.x;
      best.fmin = r.fmin;
    }
    // Next run starts near the incumbent best; perturbations shrink with
    // the simplex edge so a local profile stays local across restarts.
    for (int d = 0; d < 3; ++d) {
      const double span = feasible.hi[d] - feasible.lo[d];
      const double jitter =
          config.simplex_edge > 0.0
              ? config.simplex_edge
              : 0.05 * std::min(1.0 + std::fabs(best.x[d]), span);
      from[d] = best.x[d] + jitter * (2.0 * rng.next_uniform() - 1.0);
    }
    from = feasible.clamp(from);
  }
  best.iterations = total_iterations;
  best.converged = any_converged && std::isfinite(best.fmin);
  if (!std::isfinite(best.fmin))
    throw optimization_failure("minimize: no finite objective value found");
  return best;
}

} // namespace tailgarch
