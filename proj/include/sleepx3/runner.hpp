#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sleepx3/environment.hpp"
#include "sleepx3/oracle.hpp"
#include "sleepx3/policy.hpp"

namespace sleepx3 {

struct ExperimentSpec {
  EnvironmentConfig environment;
  EstimatorVariant estimator_variant = EstimatorVariant::kExact;
  std::int64_t mc_sample_cap = 2000;  // 0 = uncapped (samples = t)
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  std::int64_t checkpoint_every = 0;  // 0 = max(1, T/100)

  void validate() const;

  // Strict config parsing: keys mirror the field names, unknown keys are
  // errors ("ConfigError" with the field path).
  static ExperimentSpec from_json_text(const std::string& text);
  static ExperimentSpec from_json_file(const std::string& path);
  std::string to_json_text() const;
};

struct CheckpointRow {
  std::int64_t t = 0;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
  double mean_lambda = 0.0;
  double mean_wall_ms = 0.0;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  double final_regret = 0.0;
  double final_learner_loss = 0.0;
  std::vector<double> regret_at_checkpoint;
  std::vector<double> wall_ms_at_checkpoint;
};

struct AggregateReport {
  std::vector<std::int64_t> checkpoints;
  std::vector<CheckpointRow> rows;
  std::vector<SeedOutcome> per_seed;
  double total_wall_ms = 0.0;
};

// One episode per seed (optionally across worker threads), per-seed trace
// CSV `trace_seed<seed>.csv`, `aggregate.csv`, and `summary.json` under
// spec.output_dir. Regret at checkpoint t is measured against the best
// hindsight policy for the first t rounds. Everything except wall-clock
// columns is a pure function of the spec.
AggregateReport run_experiment(const ExperimentSpec& spec, int workers = 0);

struct SublinearityCheck {
  bool positive_final = false;
  bool ratio_decreasing = false;
  bool under_ceiling = false;
  double final_mean_regret = 0.0;
  std::vector<double> rates;  // regret/t at the probed checkpoints
  double ceiling = 0.0;

  bool passed() const {
    return positive_final && ratio_decreasing && under_ceiling;
  }
};

// Probes the checkpoints nearest T/4, T/2 and T: mean regret must be
// positive, regret/t strictly decreasing, and the final mean regret below
// the k*N^2*sqrt(T log T) shape ceiling.
SublinearityCheck check_sublinearity(const AggregateReport& report, int n,
                                     int k);

struct EstimatorComparisonRow {
  std::int64_t t = 0;
  double max_gap = 0.0;
  double exact_micros = 0.0;
  double mc_micros = 0.0;
};

struct EstimatorComparisonReport {
  std::vector<EstimatorComparisonRow> rows;
};

// Head-to-head exact vs Monte Carlo joint estimates along one episode
// (first seed), on identical availability counts and weights. Writes
// `estimator_comparison.csv` under spec.output_dir. Requires N <= the
// enumeration limit.
EstimatorComparisonReport compare_estimators(const ExperimentSpec& spec);

struct OracleCheckResult {
  int instances = 0;
  int failures = 0;
  std::string detail;

  bool passed() const { return failures == 0 && instances > 0; }
};

// Draws small random instances (N <= 4, k <= 2, T <= 20, Bernoulli
// losses) and verifies that best_policy's comparator loss equals a joint
// exhaustive search over all policies on the observed sets, exactly.
OracleCheckResult run_oracle_check(std::uint64_t seed, int instances = 50);

}  // namespace sleepx3
