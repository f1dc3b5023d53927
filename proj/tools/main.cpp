// Command-line front end: seed-replicated experiments, estimator
// comparison, and the brute-force oracle self-check.
//
// Exit codes: 0 success, 1 config/IO error, 2 acceptance-check failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "sleepx3/errors.hpp"
#include "sleepx3/format.hpp"
#include "sleepx3/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, int workers,
            const std::string& output_override, bool check_sublinear) {
  sleepx3::ExperimentSpec spec =
      sleepx3::ExperimentSpec::from_json_file(config_path);
  if (!output_override.empty()) spec.output_dir = output_override;

  const sleepx3::AggregateReport report =
      sleepx3::run_experiment(spec, workers);
  std::printf("ran %zu seed(s), T = %lld, wrote %s\n", spec.seeds.size(),
              static_cast<long long>(spec.environment.horizon),
              spec.output_dir.c_str());
  std::printf("final mean regret = %s (stderr %s)\n",
              sleepx3::format_fixed9(report.rows.back().mean_regret).c_str(),
              sleepx3::format_fixed9(report.rows.back().stderr_regret).c_str());

  if (check_sublinear) {
    const sleepx3::SublinearityCheck check = sleepx3::check_sublinearity(
        report, spec.environment.n, spec.environment.k);
    std::printf("sublinearity: positive=%d ratio_decreasing=%d ceiling=%d\n",
                check.positive_final ? 1 : 0, check.ratio_decreasing ? 1 : 0,
                check.under_ceiling ? 1 : 0);
    if (!check.passed()) {
      std::fprintf(stderr, "sublinearity check failed\n");
      return 2;
    }
  }
  return 0;
}

int cmd_compare(const std::string& config_path,
                const std::string& output_override) {
  sleepx3::ExperimentSpec spec =
      sleepx3::ExperimentSpec::from_json_file(config_path);
  if (!output_override.empty()) spec.output_dir = output_override;

  const sleepx3::EstimatorComparisonReport report =
      sleepx3::compare_estimators(spec);
  double max_gap = 0.0;
  for (const auto& row : report.rows) max_gap = std::max(max_gap, row.max_gap);
  std::printf("compared %zu rounds, max per-round gap = %s, wrote %s\n",
              report.rows.size(), sleepx3::format_fixed9(max_gap).c_str(),
              (spec.output_dir + "/estimator_comparison.csv").c_str());
  return 0;
}

int cmd_oracle_check(const std::string& config_path, int instances) {
  const sleepx3::ExperimentSpec spec =
      sleepx3::ExperimentSpec::from_json_file(config_path);
  const sleepx3::OracleCheckResult result =
      sleepx3::run_oracle_check(spec.seeds.front(), instances);
  std::printf("oracle-check: %d/%d instances matched exhaustive search\n",
              result.instances - result.failures, result.instances);
  if (!result.passed()) {
    std::fprintf(stderr, "%s", result.detail.c_str());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sleeping EXP3 with multiple plays: simulation runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  int workers = 0;
  bool check_sublinear = false;
  int instances = 50;

  auto* run = app.add_subcommand("run", "run a seed-replicated experiment");
  run->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--workers", workers, "worker threads (0 = auto)");
  run->add_option("--output", output_override, "override output directory");
  run->add_flag("--check-sublinear", check_sublinear,
                "exit nonzero unless the regret curve is sublinear");

  auto* cmp = app.add_subcommand("compare-estimators",
                                 "exact vs Monte Carlo joint estimates");
  cmp->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  cmp->add_option("--output", output_override, "override output directory");

  auto* oracle = app.add_subcommand(
      "oracle-check", "verify best_policy against joint exhaustive search");
  oracle->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  oracle->add_option("--instances", instances, "number of random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, workers, output_override, check_sublinear);
    if (cmp->parsed()) return cmd_compare(config_path, output_override);
    if (oracle->parsed()) return cmd_oracle_check(config_path, instances);
  } catch (const sleepx3::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
