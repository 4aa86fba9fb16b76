#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "tsil/environments.hpp"

using namespace tsil;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

LoggedDataset known_means_dataset(int k, std::size_t n, Rng& rng) {
  LoggedDataset data;
  data.num_actions = k;
  for (std::size_t i = 0; i < n; ++i) {
    const ActionId a = rng.uniform_int(k);
    data.tuples.push_back({vec({rng.uniform() - 0.5}), a, 0.1 * a + rng.normal()});
  }
  return data;
}

}  // namespace

TEST(Wheel, CenterHasHubOptimal) {
  const WheelConfig config;
  EXPECT_EQ(wheel_mean_rewards(config, vec({0, 0})), vec({1.2, 1, 1, 1, 1}));
}

TEST(Wheel, InsideRadiusHasNoSpike) {
  const WheelConfig config;
  EXPECT_EQ(wheel_mean_rewards(config, vec({0.9, 0.3})), vec({1.2, 1, 1, 1, 1}));
}

TEST(Wheel, QuadrantTable) {
  const WheelConfig config;
  const struct {
    double x, y;
    ActionId arm;
  } cases[] = {{0.8, 0.6, 1}, {-0.8, 0.6, 2}, {-0.8, -0.6, 3}, {0.8, -0.6, 4},
               {0.0, 0.99, 1}, {0.99, 0.0, 1}, {-0.99, 0.0, 2}, {0.0, -0.99, 4}};
  for (const auto& c : cases) {
    const Vector s = vec({c.x, c.y});
    EXPECT_EQ(wheel_spike_arm(s), c.arm) << c.x << "," << c.y;
    const Vector m = wheel_mean_rewards(config, s);
    EXPECT_EQ(m[0], 1.2);
    for (int a = 1; a < 5; ++a) EXPECT_EQ(m[a], a == c.arm ? 50.0 : 1.0);
  }
}

TEST(Wheel, SpikeFrequencyMatchesAnnulusArea) {
  const WheelConfig config;
  Rng rng(1);
  long outside = 0;
  const long n = 1000000;
  for (long i = 0; i < n; ++i) {
    const auto s = wheel_sample(config, rng);
    ASSERT_LE(s.context.norm(), 1.0);
    if (s.context.norm() >= 0.95) ++outside;
  }
  EXPECT_NEAR(outside / double(n), 0.0975, 0.002);
}

TEST(Wheel, ObservedRewardIsMeanPlusNoise) {
  WheelBandit env;
  Rng rng(2);
  const auto round = env.next(rng);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += env.reward(round, 0, rng);
  EXPECT_NEAR(sum / n, 1.2, 1e-3);
}

TEST(Wheel, ValidatesConfig) {
  WheelConfig c;
  c.delta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Regret, NonNegativeAndZeroForBest) {
  Round r{vec({0, 0}), vec({1.2, 1, 50, 1, 1}), 0};
  EXPECT_EQ(instant_regret(r, 2), 0.0);
  EXPECT_DOUBLE_EQ(instant_regret(r, 0), 48.8);
  EXPECT_THROW(instant_regret(r, 5), DimensionError);
}

TEST(Mushroom, Rewards) {
  Rng rng(3);
  EXPECT_EQ(mushroom_reward(false, kEat, rng), 5.0);
  EXPECT_EQ(mushroom_reward(false, kAbstain, rng), 0.0);
  EXPECT_EQ(mushroom_reward(true, kAbstain, rng), 0.0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double r = mushroom_reward(true, kEat, rng);
    ASSERT_TRUE(r == 5.0 || r == -35.0);
    sum += r;
  }
  EXPECT_NEAR(sum / n, -15.0, 0.5);
  EXPECT_EQ(mushroom_mean_reward(true, kEat), -15.0);
}

TEST(Dosage, Rewards) {
  EXPECT_EQ(dosage_reward(dosage_level(7, 20, 0, 1), 7, 20, 0, 1), 1.0);
  EXPECT_EQ(dosage_reward(0.0, 19, 20, 0, 1), 0.0);
  EXPECT_NEAR(dosage_reward(0.5, 10, 20, 0, 1), 0.97368, 1e-5);
  EXPECT_THROW(dosage_reward(0.5, 20, 20, 0, 1), DimensionError);
}

TEST(LoadSupervised, MinMaxScaling) {
  const auto path = write_temp("tsil_minmax.csv", "x,label\n3,a\n7,b\n5,c\n");
  SupervisedBanditSpec spec;
  spec.csv_path = path;
  spec.label_column = "label";
  const auto data = load_supervised_csv(spec);
  std::map<std::string, double> by_label;
  for (std::size_t i = 0; i < data.labels.size(); ++i) by_label[data.labels[i]] = data.contexts[i][0];
  EXPECT_EQ(by_label["a"], 0.0);
  EXPECT_EQ(by_label["b"], 1.0);
  EXPECT_EQ(by_label["c"], 0.5);
  std::filesystem::remove(path);
}

TEST(LoadSupervised, OneHotEncoding) {
  const auto path = write_temp("tsil_onehot.csv", "c,label\na,0\nb,1\na,2\n");
  SupervisedBanditSpec spec;
  spec.csv_path = path;
  spec.label_column = "label";
  const auto data = load_supervised_csv(spec);
  ASSERT_EQ(data.feature_names.size(), 2u);
  std::map<std::string, Vector> by_label;
  for (std::size_t i = 0; i < data.labels.size(); ++i) by_label[data.labels[i]] = data.contexts[i];
  EXPECT_EQ(by_label["0"], vec({1, 0}));
  EXPECT_EQ(by_label["1"], vec({0, 1}));
  EXPECT_EQ(by_label["2"], vec({1, 0}));
  std::filesystem::remove(path);
}

TEST(LoadSupervised, NonNumericCellReportsRowAndColumn) {
  const auto path = write_temp("tsil_bad.csv", "x,label\n1,a\nfoo,b\n");
  SupervisedBanditSpec spec;
  spec.csv_path = path;
  spec.label_column = "label";
  spec.column_types["x"] = ColumnType::numeric;
  try {
    load_supervised_csv(spec);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_EQ(e.column(), "x");
  }
  std::filesystem::remove(path);
}

TEST(LoadSupervised, MissingFileThrows) {
  SupervisedBanditSpec spec;
  spec.csv_path = "/nonexistent/tsil.csv";
  spec.label_column = "label";
  EXPECT_THROW(load_supervised_csv(spec), Error);
}

TEST(LoadSupervised, MushroomSchemaHas117Features) {
  const auto path = std::filesystem::temp_directory_path() / "tsil_mushroom.csv";
  Rng rng(4);
  write_synthetic_mushroom_csv(path, 2000, rng);
  SupervisedBanditSpec spec;
  spec.csv_path = path;
  spec.label_column = "class";
  const auto data = load_supervised_csv(spec);
  EXPECT_EQ(data.contexts.front().size(), 117);
  MushroomBandit env(data, "p");
  EXPECT_EQ(env.context_dim(), 117);
  std::filesystem::remove(path);
}

TEST(LoadSupervised, WarfarinSchemaHas17Features) {
  const auto path = std::filesystem::temp_directory_path() / "tsil_warfarin.csv";
  Rng rng(5);
  write_synthetic_warfarin_csv(path, 500, rng);
  SupervisedBanditSpec spec;
  spec.csv_path = path;
  spec.label_column = "optimal_dose";
  spec.column_types["optimal_dose"] = ColumnType::numeric;
  const auto data = load_supervised_csv(spec);
  EXPECT_EQ(data.contexts.front().size(), 17);
  DosageBandit env(data, 20);
  EXPECT_LT(env.low(), env.high());
  Rng r(6);
  const auto round = env.next(r);
  EXPECT_LE(round.mean_rewards.maxCoeff(), 1.0);
  EXPECT_GE(round.mean_rewards.minCoeff(), 0.0);
  std::filesystem::remove(path);
}

TEST(Video, SuccessIsMonotoneDecreasingAndPayoffIncreasing) {
  VideoTranscodeBandit env(7);
  Rng rng(7);
  const auto round = env.next(rng);
  for (int a = 1; a < 7; ++a) {
    EXPECT_LE(env.success_probability(round.context, a), env.success_probability(round.context, a - 1));
  }
  for (int a = 0; a < 7; ++a) {
    const double r = env.reward(round, a, rng);
    EXPECT_TRUE(r == 0.0 || r == (a + 1) / 7.0);
  }
}

TEST(Replay, UniformPolicyAcceptsOneInK) {
  Rng rng(8);
  const int k = 7;
  const auto data = known_means_dataset(k, 100000, rng);
  UniformRandomPolicy policy(1, k);
  const long valid = 10000;
  const auto result = replay_evaluate(data, policy, valid, rng);
  EXPECT_EQ(static_cast<long>(result.accepted.size()), valid);
  const double p = 1.0 / k;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(result.consumed));
  EXPECT_NEAR(result.acceptance_rate(), p, 3 * se);
}

TEST(Replay, MatchingDeterministicPolicyAcceptsAll) {
  LoggedDataset data;
  data.num_actions = 3;
  for (int i = 0; i < 50; ++i) data.tuples.push_back({vec({1.0}), 2, 1.0});
  FixedActionPolicy policy(1, 3, 2);
  Rng rng(9);
  const auto result = replay_evaluate(data, policy, 50, rng);
  EXPECT_EQ(result.acceptance_rate(), 1.0);
  EXPECT_EQ(result.mean_reward(), 1.0);
}

TEST(Replay, ExhaustionThrows) {
  LoggedDataset data;
  data.num_actions = 3;
  for (int i = 0; i < 10; ++i) data.tuples.push_back({vec({1.0}), 0, 1.0});
  FixedActionPolicy policy(1, 3, 1);
  Rng rng(10);
  EXPECT_THROW(replay_evaluate(data, policy, 1, rng), ExhaustedError);
}

TEST(Replay, DeterministicForSeed) {
  Rng gen(11);
  const auto data = known_means_dataset(4, 5000, gen);
  UniformRandomPolicy policy(1, 4);
  Rng a(12), b(12);
  const auto ra = replay_evaluate(data, policy, 500, a);
  const auto rb = replay_evaluate(data, policy, 500, b);
  ASSERT_EQ(ra.accepted.size(), rb.accepted.size());
  for (std::size_t i = 0; i < ra.accepted.size(); ++i) EXPECT_EQ(ra.accepted[i].step, rb.accepted[i].step);
}

TEST(Replay, HooksCalledEveryBatch) {
  Rng gen(13);
  const auto data = known_means_dataset(2, 5000, gen);
  UniformRandomPolicy policy(1, 2);
  int calls = 0;
  ReplayHooks hooks{[&]() -> const DecisionPolicy& { return policy; },
                    [&](std::span<const InteractionRecord> batch) {
                      EXPECT_EQ(batch.size(), 100u);
                      ++calls;
                    }};
  Rng rng(14);
  replay_evaluate(data, hooks, 1000, 100, rng);
  EXPECT_EQ(calls, 10);
}

TEST(LoggedDataset, CsvRoundTrip) {
  Rng rng(15);
  const auto data = known_means_dataset(3, 20, rng);
  const auto path = std::filesystem::temp_directory_path() / "tsil_logged.csv";
  data.write_csv(path);
  const auto back = LoggedDataset::read_csv(path, 3);
  ASSERT_EQ(back.tuples.size(), data.tuples.size());
  for (std::size_t i = 0; i < data.tuples.size(); ++i) {
    EXPECT_EQ(back.tuples[i].context, data.tuples[i].context);
    EXPECT_EQ(back.tuples[i].action, data.tuples[i].action);
    EXPECT_EQ(back.tuples[i].reward, data.tuples[i].reward);
  }
  std::filesystem::remove(path);
}

TEST(LoggedDataset, RejectsActionOutOfRange) {
  const auto path = write_temp("tsil_logged_bad.csv", "ctx_0,action,reward\n0.5,4,1\n");
  EXPECT_THROW(LoggedDataset::read_csv(path, 3), IngestError);
  std::filesystem::remove(path);
}
