// Command-line front end: fit one estimator on a returns file, simulate a
// series, run a Monte Carlo experiment from a spec file, or print the
// fractile-balance and convergence-rate diagnostics.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 data error,
// 3 the optimizer failed to produce a usable fit.

#include <CLI11.hpp>
#include <tailgarch/tailgarch.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace tg = tailgarch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNoConvergence = 3;

struct FitArgs {
  std::string data;
  std::string column;
  std::string mode = "returns";
  std::string estimator = "qmttl";
  std::string trim_mode = "strong-asym";
  std::string redescender = "simple";
  double pqml_index = 3.5;
  double lambda = 0.025;
  std::uint64_t seed = 1;
  std::string out;
};

struct SimArgs {
  std::size_t n = 800;
  std::uint64_t seed = 1;
  std::optional<double> kappa;
  std::string out;
};

struct McArgs {
  std::string spec_path;
  std::optional<std::size_t> n;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct BalanceArgs {
  double kappa = 2.5;
  std::size_t n = 800;
  double lambda = 0.025;
  std::string out;
};

tg::EstimatorFamily family_from_name(const std::string& name) {
  if (name == "qmttl") return tg::EstimatorFamily::Qmttl;
  if (name == "mnwm") return tg::EstimatorFamily::Mnwm;
  if (name == "qml") return tg::EstimatorFamily::Qml;
  if (name == "loglad" || name == "log-lad") return tg::EstimatorFamily::LogLad;
  if (name == "wlqml") return tg::EstimatorFamily::Wlqml;
  if (name == "pqml") return tg::EstimatorFamily::Pqml;
  if (name == "pqmttl") return tg::EstimatorFamily::Pqmttl;
  throw tg::invalid_config(
      "unknown estimator '" + name +
      "' (expected qmttl, mnwm, qml, loglad, wlqml, pqml, pqmttl)");
}

tg::TrimMode trim_mode_from_name(const std::string& name) {
  if (name == "strong-asym") return tg::TrimMode::StrongAsym;
  if (name == "weak-asym") return tg::TrimMode::WeakAsym;
  if (name == "symmetric") return tg::TrimMode::Symmetric;
  throw tg::invalid_config(
      "unknown trim mode '" + name +
      "' (expected strong-asym, weak-asym, symmetric)");
}

tg::Redescender redescender_from_name(const std::string& name) {
  if (name == "simple") return tg::Redescender::simple_trim();
  if (name == "tukey") return tg::Redescender::tukey();
  if (name == "exponential") return tg::Redescender::exponential();
  if (name == "hampel") return tg::Redescender::hampel();
  throw tg::invalid_config(
      "unknown redescender '" + name +
      "' (expected simple, tukey, exponential, hampel)");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    tg::write_text_file(out_path, text);
}

int cmd_fit(const FitArgs& args) {
  tg::LoadOptions load;
  load.column = args.column;
  load.kind = args.mode == "prices" ? tg::SeriesKind::Prices
                                    : tg::SeriesKind::Returns;
  const tg::LoadedSeries series = tg::load_returns(args.data, load);

  const tg::EstimatorFamily family = family_from_name(args.estimator);
  tg::FitConfig config;
  config.optimizer.seed = args.seed;
  config.pqml_index = args.pqml_index;
  const tg::TrimMode mode = trim_mode_from_name(args.trim_mode);
  if (family == tg::EstimatorFamily::Qmttl ||
      family == tg::EstimatorFamily::Pqmttl)
    config.plan = tg::fractile_schedule(series.values.size(), args.lambda, mode);
  if (family == tg::EstimatorFamily::Mnwm) {
    config.plan = tg::fractile_schedule(series.values.size(), args.lambda,
                                        tg::TrimMode::Symmetric);
    config.redescender = redescender_from_name(args.redescender);
  }

  const tg::FitResult fit = tg::fit(family, series.values, config);
  if (!fit.converged) {
    std::fprintf(stderr, "fit did not converge after %d iterations\n",
                 fit.iterations);
    return kExitNoConvergence;
  }

  std::optional<tg::ScaleEstimate> scale;
  if (family == tg::EstimatorFamily::Qml ||
      family == tg::EstimatorFamily::Qmttl) {
    scale = tg::qmttl_scale(series.values, fit.theta_hat, config.plan,
                            config.use_y_trim);
  } else if (family == tg::EstimatorFamily::Mnwm) {
    scale = tg::mnwm_scale(series.values, fit.theta_hat, config);
  }

  emit(args.out, tg::render_fit_csv(args.estimator, fit,
                                    scale ? &*scale : nullptr));

  std::fprintf(stderr,
               "fit %s on %zu returns (column '%s'): theta = (%.6f, %.6f, "
               "%.6f), criterion %.8f, %d iterations\n",
               args.estimator.c_str(), series.values.size(),
               series.column_name.c_str(), fit.theta_hat.omega,
               fit.theta_hat.alpha, fit.theta_hat.beta, fit.criterion_value,
               fit.iterations);
  return kExitOk;
}

int cmd_simulate(const SimArgs& args) {
  const tg::GarchParams theta0{0.05, 0.05, 0.90};
  const tg::ErrorDist dist =
      args.kappa ? tg::ErrorDist::pareto(*args.kappa) : tg::ErrorDist::gaussian();
  const std::vector<double> y =
      tg::simulate_garch(theta0, dist, args.n, args.seed);
  emit(args.out, tg::render_series_csv(y));
  return kExitOk;
}

int cmd_montecarlo(const McArgs& args) {
  std::string text;
  try {
    text = tg::read_text_file(args.spec_path);
  } catch (const tg::error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitData;
  }

  tg::ExperimentSpec spec;
  try {
    spec = tg::parse_experiment_spec(text);
    if (args.n) spec.n = *args.n;
    if (args.reps) spec.replications = *args.reps;
    if (args.seed) spec.seed = *args.seed;
    tg::validate_experiment_spec(spec);
  } catch (const tg::error& e) {
    // A malformed experiment description is a usage problem: the message
    // names the offending key or token.
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  }

  const tg::ExperimentResult result = tg::run_experiment(spec);

  std::string prefix = args.out;
  if (prefix.empty())
    prefix = std::filesystem::path(args.spec_path).stem().string();
  tg::write_text_file(prefix + "_summary.csv", tg::render_summary_csv(result));
  tg::write_text_file(prefix + "_estimates.csv",
                      tg::render_estimates_csv(result));
  tg::write_text_file(prefix + "_meta.txt", tg::render_run_meta(result, text));

  std::size_t incomplete = 0;
  for (const tg::EstimatorSummary& s : result.summaries)
    if (s.incomplete) ++incomplete;
  std::fprintf(stderr,
               "experiment done: %zu estimators x %zu replications on %zu "
               "threads; %zu incomplete; reports: %s_{summary,estimates}.csv, "
               "%s_meta.txt\n",
               result.summaries.size(), result.spec.replications,
               result.threads_used, incomplete, prefix.c_str(),
               prefix.c_str());
  return kExitOk;
}

int cmd_balance(const BalanceArgs& args) {
  const tg::TrimPlan plan = tg::fractile_schedule(args.n, args.lambda);
  const std::size_t k1 =
      tg::pareto_balance_k1(args.kappa, args.n, plan.k2);
  const double residual =
      tg::pareto_balance_residual(args.kappa, args.n, k1, plan.k2);
  const double implied_k2 =
      tg::pareto_balance_implied_k2(args.kappa, args.n, k1);
  const tg::RateComparison rates =
      tg::convergence_rates(args.kappa, args.n, plan.k2);

  std::ostringstream out;
  out << "tail_index = " << args.kappa << "\n";
  out << "n = " << args.n << "\n";
  out << "schedule_k2 = " << plan.k2 << "\n";
  out << "schedule_k1 = " << plan.k1 << "\n";
  out << "schedule_k_y = " << plan.k_y << "\n";
  out << "balanced_k1 = " << k1 << "\n";
  out << "balance_residual = " << tg::format_number(residual) << "\n";
  out << "implied_k2_at_balanced_k1 = " << tg::format_number(implied_k2)
      << "\n";
  out << "trimmed_rate = " << tg::format_number(rates.trimmed_rate) << "\n";
  out << "untrimmed_rate = " << tg::format_number(rates.untrimmed_rate)
      << "\n";
  out << "trimmed_over_untrimmed = " << tg::format_number(rates.advantage)
      << "\n";
  emit(args.out, out.str());
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Heavy-tail-robust GARCH(1,1) estimation: tail-trimmed "
      "quasi-likelihood and negligibly-weighted moment estimators, "
      "benchmarks, and a Monte Carlo harness"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "Fit one estimator to a returns or price series");
  fit->add_option("--data", fit_args.data, "Delimited text data file")
      ->required();
  fit->add_option("--column", fit_args.column,
                  "Column name or 0-based index (default: first column)");
  fit->add_option("--mode", fit_args.mode, "Data mode")
      ->check(CLI::IsMember({"prices", "returns"}))
      ->capture_default_str();
  fit->add_option("--estimator", fit_args.estimator,
                  "qmttl, mnwm, qml, loglad, wlqml, pqml, pqmttl")
      ->capture_default_str();
  fit->add_option("--trim-mode", fit_args.trim_mode,
                  "strong-asym, weak-asym, symmetric")
      ->capture_default_str();
  fit->add_option("--redescender", fit_args.redescender,
                  "simple, tukey, exponential, hampel (mnwm only)")
      ->capture_default_str();
  fit->add_option("--pqml-index", fit_args.pqml_index,
                  "Power-law criterion index (> 1)")
      ->capture_default_str();
  fit->add_option("--lambda", fit_args.lambda,
                  "Fractile schedule ratio in (0,1)")
      ->capture_default_str();
  fit->add_option("--seed", fit_args.seed, "Optimizer restart seed")
      ->capture_default_str();
  fit->add_option("--out", fit_args.out,
                  "Report file (default: stdout)");

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Simulate a volatility-process sample at theta0 = "
                  "(0.05, 0.05, 0.90)");
  sim->add_option("--n", sim_args.n, "Sample length")->capture_default_str();
  sim->add_option("--seed", sim_args.seed, "Simulation seed")
      ->capture_default_str();
  sim->add_option("--kappa", sim_args.kappa,
                  "Pareto error tail index (default: Gaussian errors)");
  sim->add_option("--out", sim_args.out, "Series file (default: stdout)");

  McArgs mc_args;
  CLI::App* mc = app.add_subcommand(
      "montecarlo", "Run an experiment described by a spec file");
  mc->add_option("spec", mc_args.spec_path, "Experiment spec file")
      ->required();
  mc->add_option("--n", mc_args.n, "Override the spec sample length");
  mc->add_option("--reps", mc_args.reps,
                 "Override the spec replication count");
  mc->add_option("--seed", mc_args.seed, "Override the spec seed");
  mc->add_option("--out", mc_args.out,
                 "Report file prefix (default: spec file stem)");

  BalanceArgs bal_args;
  CLI::App* bal = app.add_subcommand(
      "balance", "Print fractile-balance and convergence-rate diagnostics");
  bal->add_option("--kappa", bal_args.kappa, "Error tail index in (2,4)")
      ->capture_default_str();
  bal->add_option("--n", bal_args.n, "Sample length")->capture_default_str();
  bal->add_option("--lambda", bal_args.lambda,
                  "Fractile schedule ratio in (0,1)")
      ->capture_default_str();
  bal->add_option("--out", bal_args.out, "Report file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (mc->parsed()) return cmd_montecarlo(mc_args);
    if (bal->parsed()) return cmd_balance(bal_args);
  } catch (const tg::invalid_config& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  } catch (const tg::optimization_failure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoConvergence;
  } catch (const tg::numerical_rank_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoConvergence;
  } catch (const tg::error& e) {
    // parse_error, invalid_data, invalid_input: the inputs, not the usage.
    std::fprintf(stderr, "%s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
