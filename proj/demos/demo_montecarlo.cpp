// Demo: a small Monte Carlo experiment built in code rather than from a spec
// file. Compares the tail-trimmed quasi-likelihood estimator against the
// plain Gaussian one on heavy-tailed data and prints the summary table.

#include <tailgarch/tailgarch.hpp>

#include <cstdio>

namespace tg = tailgarch;

int main() {
  tg::ExperimentSpec spec;
  spec.n = 100;
  spec.replications = 200;  // enough to see the bias gap; runs in seconds
  spec.seed = 20260816;
  spec.dist = tg::ErrorDist::pareto(2.5);
  spec.estimators = {tg::parse_estimator_token("qmttl-sa"),
                     tg::parse_estimator_token("qml"),
                     tg::parse_estimator_token("log-lad")};
  spec.hypotheses = {0.9, 0.5};

  const tg::ExperimentResult result = tg::run_experiment(spec);

  std::printf("n = %zu, %zu replications, %s errors, %zu threads\n\n",
              spec.n, spec.replications, spec.dist.name().c_str(),
              result.threads_used);
  std::printf("%-10s %9s %9s %9s %11s %11s\n", "estimator", "bias", "sd",
              "rmse", "rej beta=.9", "rej beta=.5");
  for (const tg::EstimatorSummary& s : result.summaries) {
    std::printf("%-10s %+9.4f %9.4f %9.4f %11.3f %11.3f%s\n", s.token.c_str(),
                s.bias[2], s.std_dev[2], s.rmse[2], s.rejection[0],
                s.rejection[1], s.incomplete ? "  (incomplete)" : "");
  }
  std::printf("\n(third-coordinate moments; rejections use the "
              "cross-replication empirical variance)\n");
  return 0;
}
