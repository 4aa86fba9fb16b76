#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsil/environments.hpp"
#include "tsil/imitation.hpp"
#include "tsil/ts_policies.hpp"

namespace tsil {

struct EnvironmentSpec {
  std::string name = "wheel";  // wheel | mushroom | warfarin | classification | video
  WheelConfig wheel;
  SupervisedBanditSpec supervised;
  int video_actions = 7;
};

struct PolicySpec {
  std::string name = "linear_ts";  // uniform | linear_ts | neural_greedy | neural_linear_ts | bootstrap_ts
  NigPriorSpec prior;
  RewardNetConfig net;
  int replicates = 10;
  BootstrapWeighting weighting = BootstrapWeighting::poisson;
};

enum class DistillContexts { all_observed, period_observed, fresh };

struct ImitationSpec {
  bool enabled = false;
  DistillObjective objective = DistillObjective::kl;
  int n_a = 2048;
  std::vector<int> hidden{100, 100};
  DistillConfig distill;
  DistillContexts contexts = DistillContexts::all_observed;
  int n_fresh = 1000;
  std::string metric = "line";  // line | discrete
  int propensity_workers = 1;
};

struct RunSpec {
  long horizon = 10000;
  long batch_period = 1000;
  int n_trials = 1;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool per_step = true;
};

struct LatencySpec {
  int context_dim = 17;
  int num_actions = 20;
  long n_reps = 100000;
  int batch = 100;
  long warmup_records = 1000;
  std::uint64_t seed = 0;
  std::vector<PolicySpec> policies;
  /// Imitation policies listed in `policies` use these hidden widths.
  std::vector<int> imitation_hidden{100, 100};
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  PolicySpec policy;
  ImitationSpec imitation;
  RunSpec run;
  OutputSpec output;
  LatencySpec latency;

  void validate() const;

  /// Relative paths inside the config resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig from_file(const std::filesystem::path& path);
};

PolicySpec policy_spec_from_json(const nlohmann::json& j);

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec);
std::unique_ptr<LearningPolicy> make_policy(const PolicySpec& spec, int context_dim, int k,
                                            std::uint64_t seed);
ActionMetric make_metric(const std::string& name, int k);

/// Stable model file for a trained imitation policy.
nlohmann::json imitation_to_json(const ImitationPolicy& policy);
ImitationPolicy imitation_from_json(const nlohmann::json& j);

}  // namespace tsil
