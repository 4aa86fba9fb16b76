#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsil/config.hpp"

namespace tsil {

struct StepMetrics {
  long step = 0;
  ActionId action = 0;
  double reward = 0.0;
  double regret = 0.0;
  double cumulative_regret = 0.0;
};

struct PeriodMetrics {
  int period = 0;
  long step = 0;
  double cumulative_regret = 0.0;
  bool distilled = false;
  bool skipped = false;  // imitation enabled but no contexts to distill on
  long table_rows = 0;
  std::optional<double> mean_kl;
  std::optional<double> mean_w1;
  long pinsker_violations = 0;
  double update_seconds = 0.0;
};

struct MetricsLog {
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<StepMetrics> steps;
  std::vector<PeriodMetrics> periods;

  double final_cumulative_regret() const {
    return steps.empty() ? 0.0 : steps.back().cumulative_regret;
  }

  /// step,action,reward,regret,cumulative_regret
  void write_steps_csv(const std::filesystem::path& path) const;
  /// Deterministic per-period diagnostics.
  void write_periods_csv(const std::filesystem::path& path) const;
  /// Wall-clock update times (not reproducible).
  void write_timing_csv(const std::filesystem::path& path) const;
};

/// Base learner plus, when imitation is enabled, the distilled policy that is deployed
/// online. Before the first offline update the deployed policy is uniform.
class Agent {
 public:
  Agent(const ExperimentConfig& config, int context_dim, int k, std::uint64_t seed);

  const DecisionPolicy& deployed() const;
  const LearningPolicy& base() const { return *base_; }
  const ImitationPolicy* imitation() const { return imitation_ ? &*imitation_ : nullptr; }
  bool updated() const { return updated_; }

  /// Offline phase: posterior update on the period's records, then propensity
  /// simulation and distillation. `fresh` supplies contexts when configured.
  PeriodMetrics end_period(std::span<const InteractionRecord> records,
                           const std::function<Context()>& fresh);

 private:
  const ImitationSpec imitation_spec_;
  std::unique_ptr<LearningPolicy> base_;
  UniformRandomPolicy uniform_;
  std::optional<ImitationPolicy> imitation_;
  std::optional<RmspropState> optimizer_;
  std::optional<ActionMetric> metric_;
  std::vector<Context> observed_;
  Rng rng_;
  int period_ = 0;
  bool updated_ = false;
  bool distilled_ = false;
  std::optional<double> last_kl_;
};

/// Algorithm loop for one trial: act with the deployed policy, log regret against the
/// environment's true means, and run the offline phase every batch_period steps
/// (except after the final step).
MetricsLog run_trial(const ExperimentConfig& config, int trial);

/// Runs all trials (in parallel across run.workers) and writes per-trial CSVs plus
/// summary.csv to output.dir.
std::vector<MetricsLog> run_experiment(const ExperimentConfig& config, bool write_outputs = true);

struct TrialSummary {
  std::vector<long> steps;
  std::vector<double> mean;
  std::vector<double> sem;

  /// step,mean_cumulative_regret,sem,lower,upper with band mean +- 2 SEM.
  void write_csv(const std::filesystem::path& path) const;
};

/// Per-step mean and standard error of cumulative regret across trials (SEM 0 for one).
TrialSummary aggregate_trials(std::span<const MetricsLog> logs);

/// Mean and standard error of the final cumulative regret.
struct FinalRegret {
  double mean = 0.0;
  double sem = 0.0;
};
FinalRegret final_regret(std::span<const MetricsLog> logs);

struct LatencyReport {
  std::string policy;
  int context_dim = 0;
  int num_actions = 0;
  long n_reps = 0;
  double mean_ms = 0.0;
  double sem2_ms = 0.0;  // two standard errors of the mean
  double median_batch_ms = 0.0;
};

/// Times policy.act over n_reps random contexts in batches of `batch` calls.
LatencyReport bench_latency(const DecisionPolicy& policy, long n_reps, Rng& rng, int batch = 100);

/// Builds, warms up (one update) and times every policy in config.latency.
std::vector<LatencyReport> run_latency_benchmark(const ExperimentConfig& config);
void write_latency_csv(std::span<const LatencyReport> reports, const std::filesystem::path& path);

}  // namespace tsil
