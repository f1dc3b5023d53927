// Acceptance suite: one criterion per function, one PASS/FAIL line each,
// all tolerances pinned in code. Exit code 0 iff every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sleepx3/decomposition.hpp"
#include "sleepx3/environment.hpp"
#include "sleepx3/estimator.hpp"
#include "sleepx3/oracle.hpp"
#include "sleepx3/policy.hpp"
#include "sleepx3/projection.hpp"
#include "sleepx3/rng.hpp"
#include "sleepx3/runner.hpp"

using namespace sleepx3;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string detail;
};

int g_checks = 0;

void require(bool condition, const std::string& detail) {
  ++g_checks;
  if (!condition) throw Failure{detail};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("sleepx3_accept_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct RandomProjectionInstance {
  WeightVector w;
  AvailabilitySet s;
  int k;
  int n;
};

RandomProjectionInstance random_projection_instance(SeededRng& rng) {
  const int n = 2 + static_cast<int>(rng.uniform_int(31));  // N <= 32
  std::vector<double> log_w(n);
  for (double& lw : log_w) lw = (rng.uniform01() - 0.5) * 20.0;
  std::vector<ArmIndex> members;
  for (int i = 0; i < n; ++i)
    if (rng.bernoulli(0.7)) members.push_back(i);
  if (members.empty()) members.push_back(0);
  const int k = 1 + static_cast<int>(rng.uniform_int(members.size()));
  return {WeightVector::from_log_weights(log_w),
          AvailabilitySet::from_arms(members, n), k, n};
}

// --- A1 --------------------------------------------------------------------

void criterion_a1() {
  SeededRng rng(101);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto inst = random_projection_instance(rng);
    const auto q = scaled_probabilities(inst.w, inst.s, inst.k);

    double sum = 0.0;
    for (int i = 0; i < inst.n; ++i) {
      sum += q.q[i];
      require(q.q[i] <= 1.0 + 1e-12, "entry above 1 + 1e-12");
      require(q.q[i] >= 0.0, "negative entry");
      if (!inst.s.contains(i)) require(q.q[i] == 0.0, "support leak");
    }
    require(std::abs(sum - inst.k) <= 1e-9, "sum differs from k beyond 1e-9");

    const auto p = normalize_over_set(inst.w, inst.s);
    const auto capped = cap_project(p, inst.k);
    const double cap = 1.0 / inst.k;
    for (int i = 0; i < inst.n; ++i) {
      if (capped.pinned[i])
        require(capped.p_hat[i] == cap, "pinned entry not exactly 1/k");
    }
    for (int a = 0; a < inst.n; ++a) {
      if (capped.pinned[a] || p[a] == 0.0) continue;
      for (int b = a + 1; b < inst.n; ++b) {
        if (capped.pinned[b] || p[b] == 0.0) continue;
        require(std::abs(capped.p_hat[a] * p[b] - capped.p_hat[b] * p[a]) <=
                    1e-9,
                "unpinned entries not proportional within 1e-9");
      }
    }
    const auto twice = cap_project(capped.p_hat, inst.k);
    require(twice.p_hat == capped.p_hat && twice.pinned == capped.pinned,
            "projection not idempotent");
  }
}

// --- A2 --------------------------------------------------------------------

void criterion_a2() {
  SeededRng rng(202);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto inst = random_projection_instance(rng);
    const auto q = scaled_probabilities(inst.w, inst.s, inst.k);
    const auto d = decompose(q);

    require(static_cast<int>(d.terms.size()) <= inst.n, "more than N terms");
    double coeff_sum = 0.0;
    std::vector<double> acc(inst.n, 0.0);
    for (const auto& term : d.terms) {
      require(term.coefficient > 0.0, "nonpositive coefficient");
      coeff_sum += term.coefficient;
      for (ArmIndex i : term.corner.members) acc[i] += term.coefficient;
    }
    require(std::abs(coeff_sum - 1.0) <= 1e-9,
            "coefficients do not sum to 1 within 1e-9");
    for (int i = 0; i < inst.n; ++i)
      require(std::abs(acc[i] - q.q[i]) <= 1e-9,
              "reconstruction error above 1e-9");
  }

  // Sampling marginals: 20 fixed vectors, 1e5 samples each, 3 sigma bands.
  SeededRng fixed_rng(203);
  for (int vec = 0; vec < 20; ++vec) {
    const auto inst = random_projection_instance(fixed_rng);
    const auto q = scaled_probabilities(inst.w, inst.s, inst.k);
    const auto d = decompose(q);
    const int draws = 100000;
    std::vector<int> counts(inst.n, 0);
    SeededRng draw_rng(3000 + vec);
    for (int r = 0; r < draws; ++r) {
      const Corner corner = sample_corner(d, draw_rng);
      for (ArmIndex i : corner.members) ++counts[i];
    }
    for (int i = 0; i < inst.n; ++i) {
      const double freq = static_cast<double>(counts[i]) / draws;
      const double var = std::max(q.q[i] * (1.0 - q.q[i]), 0.0);
      const double band = 3.0 * std::sqrt(var / draws) + 1e-9;
      require(std::abs(freq - q.q[i]) <= band,
              "marginal outside the 3-sigma band");
    }
  }
}

// --- A3 / A8 ---------------------------------------------------------------

ExperimentSpec a3_spec(const std::string& dir) {
  ExperimentSpec spec;
  spec.environment.n = 8;
  spec.environment.k = 2;
  spec.environment.horizon = 20000;
  spec.environment.availability.assign(8, 0.8);
  spec.environment.loss_generator.kind = LossGeneratorSpec::Kind::kConstantGap;
  spec.environment.loss_generator.means = evenly_spaced_means(8, 0.1, 0.9);
  spec.environment.seed = 31;
  spec.estimator_variant = EstimatorVariant::kExact;
  spec.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) spec.seeds.push_back(s);
  spec.checkpoint_every = 5000;  // grid hits T/4, T/2, T
  spec.output_dir = dir;
  return spec;
}

std::string g_a3_dir;  // first A3 run, reused as run one of A8

void criterion_a3() {
  const fs::path dir = fresh_dir("a3");
  const auto spec = a3_spec(dir.string());
  const auto report = run_experiment(spec);
  g_a3_dir = dir.string();

  auto regret_at = [&](std::int64_t t) {
    for (const auto& row : report.rows)
      if (row.t == t) return row.mean_regret;
    throw Failure{"missing checkpoint " + std::to_string(t)};
  };
  const double r_quarter = regret_at(5000);
  const double r_half = regret_at(10000);
  const double r_full = regret_at(20000);

  require(r_full > 0.0, "mean final regret not positive");
  require(r_half / 10000.0 < r_quarter / 5000.0,
          "regret rate not decreasing from T/4 to T/2");
  require(r_full / 20000.0 < r_half / 10000.0,
          "regret rate not decreasing from T/2 to T");
  const double ceiling =
      2.0 * 64.0 * std::sqrt(20000.0 * std::log(20000.0));
  require(r_full <= ceiling, "mean regret above the k*N^2*sqrt(T log T) ceiling");

  std::printf("      (A3 detail: R/t at 5000/10000/20000 = %.4f / %.4f / %.4f,"
              " R_T = %.1f, ceiling = %.1f)\n",
              r_quarter / 5000.0, r_half / 10000.0, r_full / 20000.0, r_full,
              ceiling);
}

void criterion_a8() {
  if (g_a3_dir.empty()) {
    const fs::path dir = fresh_dir("a8_first");
    run_experiment(a3_spec(dir.string()));
    g_a3_dir = dir.string();
  }
  const fs::path dir_b = fresh_dir("a8_second");
  const auto spec = a3_spec(dir_b.string());
  run_experiment(spec);
  for (const std::uint64_t seed : spec.seeds) {
    const std::string name = "trace_seed" + std::to_string(seed) + ".csv";
    require(read_file(fs::path(g_a3_dir) / name) ==
                read_file(dir_b / name),
            "trace CSVs differ between identical runs: " + name);
  }
  fs::remove_all(g_a3_dir);
  fs::remove_all(dir_b);
}

// --- A4 --------------------------------------------------------------------

void criterion_a4() {
  const int n = 8, k = 2, t = 1000;
  SeededRng setup(404);
  AvailabilityEstimate est(n);
  const std::vector<double> a(n, 0.8);
  for (int r = 0; r < t; ++r) est.record(sample_bernoulli_set(a, setup));
  std::vector<double> log_w(n);
  for (double& lw : log_w) lw = (setup.uniform01() - 0.5) * 8.0;
  const auto w = WeightVector::from_log_weights(log_w);

  const auto exact = exact_joint_probability(est, w, k);
  const double delta = 0.01;
  const double bound =
      4.0 * k * n * std::sqrt(std::log(2.0 * n / delta) / t);
  int within = 0;
  for (int rep = 0; rep < 100; ++rep) {
    SeededRng rng(9000 + rep);
    const auto mc = monte_carlo_joint_probability(est, w, k, t, rng);
    double gap = 0.0;
    for (int i = 0; i < n; ++i) gap = std::max(gap, std::abs(mc[i] - exact[i]));
    within += (gap <= bound);
  }
  require(within >= 95, "agreement bound held in only " +
                            std::to_string(within) + "/100 repetitions");
}

// --- A5 --------------------------------------------------------------------

void criterion_a5() {
  // True availability exactly representable by counts/t: a = [1/2, 1/4, 3/4].
  const int n = 3, k = 1;
  const std::vector<double> a{0.5, 0.25, 0.75};
  AvailabilityEstimate est(n);
  est.restore({2, 1, 3}, 4);

  SeededRng setup(505);
  std::vector<double> log_w(n);
  for (double& lw : log_w) lw = (setup.uniform01() - 0.5) * 2.0;
  const auto w = WeightVector::from_log_weights(log_w);
  const std::vector<double> loss{0.3, 0.8, 0.6};

  const auto q_true = exact_joint_probability(est, w, k);  // lambda = 0 below

  const int reps = 100000;
  std::vector<double> lhat_sum(n, 0.0);
  SeededRng rng(506);
  for (int rep = 0; rep < reps; ++rep) {
    const auto s = sample_bernoulli_set(a, rng);
    if (s.empty()) continue;  // nothing played, all lhat stay 0
    const auto q_s = selection_marginals(w, s, k);
    const auto d = decompose(q_s);
    const Corner corner = sample_corner(d, rng);
    for (ArmIndex i : corner.members)
      lhat_sum[i] += loss[i] / (q_true[i] + 0.0);
  }
  for (int i = 0; i < n; ++i) {
    const double mean = lhat_sum[i] / reps;
    // Var(lhat_i) = loss_i^2 (1 - q_i) / q_i for a Bernoulli(q_i) count.
    const double sigma =
        loss[i] * std::sqrt((1.0 - q_true[i]) / q_true[i]) / std::sqrt(reps);
    require(std::abs(mean - loss[i]) <= 3.0 * sigma,
            "arm " + std::to_string(i) + " estimate off by " +
                std::to_string(mean - loss[i]) + " (3 sigma = " +
                std::to_string(3.0 * sigma) + ")");
  }
}

// --- A6 --------------------------------------------------------------------

void criterion_a6() {
  const auto result = run_oracle_check(606, 50);
  require(result.passed(), "oracle mismatch:\n" + result.detail);
}

// --- A7 --------------------------------------------------------------------

void criterion_a7() {
  SeededRng rng(707);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(14));
    std::vector<double> log_w(n);
    for (double& lw : log_w) lw = (rng.uniform01() - 0.5) * 24.0;
    const auto w = WeightVector::from_log_weights(log_w);
    std::vector<ArmIndex> members;
    for (int i = 0; i < n; ++i)
      if (rng.bernoulli(0.6)) members.push_back(i);
    if (members.empty()) members.push_back(0);
    const auto s = AvailabilitySet::from_arms(members, n);

    const auto q = scaled_probabilities(w, s, 1);
    const auto p = normalize_over_set(w, s);
    require(q.q == p, "k=1 selection law differs from normalized weights");
  }
}

// --- harness ---------------------------------------------------------------

struct Criterion {
  const char* id;
  const char* label;
  std::function<void()> fn;
  double runtime_limit_s;  // 0 = no enforced limit
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"A1", "projection correctness (1000 random instances)", criterion_a1,
       1.0},
      {"A2", "decomposition reconstruction and sampling marginals",
       criterion_a2, 30.0},
      {"A3", "sublinear regret (N=8, k=2, T=20000, 20 seeds)", criterion_a3,
       0.0},
      {"A4", "exact vs Monte Carlo estimator agreement", criterion_a4, 120.0},
      {"A5", "loss-estimate unbiasedness at lambda = 0", criterion_a5, 60.0},
      {"A6", "hindsight oracle equals joint exhaustive search", criterion_a6,
       10.0},
      {"A7", "k=1 reduction to normalized available weights", criterion_a7,
       0.0},
      {"A8", "byte-identical traces across identical runs", criterion_a8,
       0.0},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string failure_detail;
    try {
      criterion.fn();
    } catch (const Failure& f) {
      failure_detail = f.detail;
    } catch (const std::exception& e) {
      failure_detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (failure_detail.empty() && criterion.runtime_limit_s > 0.0 &&
        elapsed >= criterion.runtime_limit_s) {
      failure_detail = "runtime " + std::to_string(elapsed) + " s exceeds " +
                       std::to_string(criterion.runtime_limit_s) + " s";
    }
    if (failure_detail.empty()) {
      std::printf("[PASS] %s %s (%.2f s)\n", criterion.id, criterion.label,
                  elapsed);
    } else {
      ++failures;
      std::printf("[FAIL] %s %s (%.2f s): %s\n", criterion.id, criterion.label,
                  elapsed, failure_detail.c_str());
    }
  }
  std::printf("%d/%zu criteria passed (%d checks)\n",
              static_cast<int>(criteria.size()) - failures, criteria.size(),
              g_checks);
  return failures == 0 ? 0 : 1;
}
