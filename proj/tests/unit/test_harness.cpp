#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tsil/config.hpp"
#include "tsil/harness.hpp"

using namespace tsil;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_il_config(const std::filesystem::path& dir) {
  auto config = ExperimentConfig::from_json(json::parse(R"({
    "environment": {"name": "wheel"},
    "policy": {"name": "linear_ts"},
    "imitation": {"enabled": true, "n_a": 64, "hidden": [8], "n_minibatches": 40, "contexts": "period"},
    "run": {"horizon": 300, "batch_period": 100, "n_trials": 2, "seed": 5}
  })"));
  config.output.dir = dir;
  return config;
}

MetricsLog log_with_final(double value) {
  MetricsLog l;
  l.steps.push_back({1, 0, 0.0, value, value});
  return l;
}

}  // namespace

TEST(Config, ParsesSections) {
  const auto c = ExperimentConfig::from_json(json::parse(R"({
    "environment": {"name": "wheel", "delta": 0.5},
    "policy": {"name": "bootstrap_ts", "replicates": 4},
    "imitation": {"enabled": true, "objective": "wasserstein", "n_a": 16, "hidden": [5, 6], "metric": "discrete"},
    "run": {"horizon": 50, "batch_period": 10, "n_trials": 3, "seed": 9}
  })"));
  EXPECT_EQ(c.environment.wheel.delta, 0.5);
  EXPECT_EQ(c.policy.name, "bootstrap_ts");
  EXPECT_EQ(c.policy.replicates, 4);
  EXPECT_TRUE(c.imitation.enabled);
  EXPECT_EQ(c.imitation.objective, DistillObjective::wasserstein);
  EXPECT_EQ(c.imitation.hidden, (std::vector<int>{5, 6}));
  EXPECT_EQ(c.imitation.metric, "discrete");
  EXPECT_EQ(c.run.horizon, 50);
  EXPECT_EQ(c.run.seed, 9u);
}

TEST(Config, RejectsInvalidValues) {
  const auto bad = [](const char* text) {
    return [text] { ExperimentConfig::from_json(json::parse(text)).validate(); };
  };
  EXPECT_THROW(bad(R"({"run": {"horizon": 10, "batch_period": 0}})")(), ConfigError);
  EXPECT_THROW(bad(R"({"run": {"horizon": 10, "batch_period": 20}})")(), ConfigError);
  EXPECT_THROW(bad(R"({"imitation": {"objective": "hellinger"}})")(), ConfigError);
  EXPECT_THROW(bad(R"({"imitation": {"contexts": "some"}})")(), ConfigError);
  EXPECT_THROW(bad(R"({"run": {"horizon": "long"}})")(), ConfigError);
  EXPECT_THROW(bad(R"([1, 2])")(), ConfigError);
  EXPECT_THROW(make_environment(EnvironmentSpec{"moon", {}, {}, 7}), ConfigError);
  PolicySpec p;
  p.name = "oracle";
  EXPECT_THROW(make_policy(p, 2, 3, 1), ConfigError);
}

TEST(Config, ImitationModelJsonRoundTrip) {
  Rng rng(1);
  ImitationPolicy policy(3, 4, {5}, rng);
  const auto back = imitation_from_json(json::parse(imitation_to_json(policy).dump()));
  EXPECT_EQ(back.net().params().flatten(), policy.net().params().flatten());
}

TEST(Harness, RegretIsNonNegativeAndCumulative) {
  auto config = small_il_config(std::filesystem::temp_directory_path() / "tsil_h1");
  config.imitation.enabled = false;
  const auto log = run_trial(config, 0);
  ASSERT_EQ(log.steps.size(), 300u);
  double prev = 0.0;
  for (const auto& s : log.steps) {
    EXPECT_GE(s.regret, 0.0);
    EXPECT_GE(s.cumulative_regret, prev);
    prev = s.cumulative_regret;
  }
  ASSERT_EQ(log.periods.size(), 2u);  // no update after the final step
  EXPECT_EQ(log.periods[0].step, 100);
}

TEST(Harness, UniformWheelRegretMatchesAnalyticValue) {
  // Inside the radius: 1.2 - (1.2 + 4) / 5. Outside: 50 - (1.2 + 3 + 50) / 5.
  const double inside = 0.95 * 0.95;
  const double expected = inside * 0.16 + (1 - inside) * 39.16;
  auto config = small_il_config(std::filesystem::temp_directory_path() / "tsil_h2");
  config.imitation.enabled = false;
  config.policy.name = "uniform";
  config.run.horizon = 20000;
  config.run.batch_period = 20000;
  const auto log = run_trial(config, 0);
  double sum = 0.0, sq = 0.0;
  for (const auto& s : log.steps) {
    sum += s.regret;
    sq += s.regret * s.regret;
  }
  const double n = static_cast<double>(log.steps.size());
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, expected, 4 * se);
}

TEST(Harness, DeployedPolicyIsUniformBeforeFirstUpdate) {
  auto config = small_il_config({});
  Agent agent(config, 2, 5, 3);
  EXPECT_EQ(agent.deployed().name(), "uniform");
  EXPECT_FALSE(agent.updated());
}

TEST(Harness, ImitationPeriodsAreDistilled) {
  auto config = small_il_config({});
  const auto log = run_trial(config, 0);
  ASSERT_EQ(log.periods.size(), 2u);
  for (const auto& p : log.periods) {
    EXPECT_TRUE(p.distilled);
    EXPECT_EQ(p.table_rows, 100);
    ASSERT_TRUE(p.mean_kl.has_value());
    EXPECT_GE(*p.mean_kl, 0.0);
    EXPECT_EQ(p.pinsker_violations, 0);
  }
}

TEST(Harness, EmptyFreshSetIsSkipped) {
  auto config = small_il_config({});
  config.imitation.contexts = DistillContexts::fresh;
  config.imitation.n_fresh = 0;
  const auto log = run_trial(config, 0);
  for (const auto& p : log.periods) {
    EXPECT_TRUE(p.skipped);
    EXPECT_FALSE(p.distilled);
  }
}

TEST(Harness, OutputsAreDeterministic) {
  const auto a = std::filesystem::temp_directory_path() / "tsil_det_a";
  const auto b = std::filesystem::temp_directory_path() / "tsil_det_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  auto ca = small_il_config(a);
  auto cb = small_il_config(b);
  cb.run.workers = 2;
  run_experiment(ca);
  run_experiment(cb);
  for (const char* f : {"metrics_0.csv", "metrics_1.csv", "periods_0.csv", "periods_1.csv", "summary.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "metrics_0.csv"), slurp(a / "metrics_1.csv"));
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Aggregate, MeanAndStandardError) {
  const std::vector<MetricsLog> logs{log_with_final(1.0), log_with_final(3.0)};
  const auto s = aggregate_trials(logs);
  EXPECT_EQ(s.mean[0], 2.0);
  EXPECT_NEAR(s.sem[0], 1.0, 1e-15);
  const auto f = final_regret(logs);
  EXPECT_EQ(f.mean, 2.0);
  EXPECT_NEAR(f.sem, 1.0, 1e-15);
  const std::vector<MetricsLog> one{log_with_final(4.0)};
  EXPECT_EQ(aggregate_trials(one).sem[0], 0.0);
}

TEST(Latency, ReportsPositiveTimes) {
  UniformRandomPolicy policy(4, 3);
  Rng rng(1);
  const auto r = bench_latency(policy, 2000, rng, 100);
  EXPECT_EQ(r.n_reps, 2000);
  EXPECT_GT(r.mean_ms, 0.0);
  EXPECT_GE(r.sem2_ms, 0.0);
}

TEST(Latency, LinearTsTwoWideArmsFasterThanTwentyNarrowOnes) {
  Rng rng(2);
  PolicySpec spec;
  const auto a = make_policy(spec, 117, 2, 1);
  const auto b = make_policy(spec, 17, 20, 1);
  const auto ra = bench_latency(*a, 20000, rng);
  const auto rb = bench_latency(*b, 20000, rng);
  EXPECT_LT(ra.mean_ms, rb.mean_ms);
}

TEST(Latency, ImitationIsInsensitiveToActionCount) {
  Rng rng(3);
  ImitationPolicy small(17, 7, {100, 100}, rng);
  ImitationPolicy large(17, 50, {100, 100}, rng);
  const auto rs = bench_latency(small, 50000, rng);
  const auto rl = bench_latency(large, 50000, rng);
  EXPECT_LT(rl.mean_ms / rs.mean_ms, 1.5);
}
