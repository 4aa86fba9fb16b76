#include "tsil/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tsil/csv.hpp"

namespace tsil {

double instant_regret(const Round& round, ActionId action) {
  check_action(action, static_cast<int>(round.mean_rewards.size()));
  return std::max(0.0, round.mean_rewards.maxCoeff() - round.mean_rewards[action]);
}

// --- Wheel -----------------------------------------------------------------

void WheelConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("wheel delta must lie in (0, 1)");
  if (!(sigma > 0.0)) throw ConfigError("wheel sigma must be > 0");
}

ActionId wheel_spike_arm(const Vector& s) {
  check_dim(s, 2, "wheel context");
  const bool x_pos = s[0] >= 0.0;
  const bool y_pos = s[1] >= 0.0;
  if (x_pos && y_pos) return 1;
  if (!x_pos && y_pos) return 2;
  if (!x_pos && !y_pos) return 3;
  return 4;
}

Vector wheel_mean_rewards(const WheelConfig& config, const Vector& s) {
  Vector means = Vector::Constant(5, config.mean_inner);
  means[0] = config.mean_hub;
  if (s.norm() > config.delta) means[wheel_spike_arm(s)] = config.mean_spike;
  return means;
}

WheelSample wheel_sample(const WheelConfig& config, Rng& rng) {
  Vector s(2);
  do {
    s[0] = 2.0 * rng.uniform() - 1.0;
    s[1] = 2.0 * rng.uniform() - 1.0;
  } while (s.squaredNorm() > 1.0);
  return {s, wheel_mean_rewards(config, s)};
}

WheelBandit::WheelBandit(WheelConfig config) : config_(config) { config_.validate(); }

Round WheelBandit::next(Rng& rng) {
  auto [s, means] = wheel_sample(config_, rng);
  return {std::move(s), std::move(means), 0};
}

double WheelBandit::reward(const Round& round, ActionId action, Rng& rng) const {
  check_action(action, 5);
  return round.mean_rewards[action] + config_.sigma * rng.normal();
}

// --- Supervised datasets ---------------------------------------------------

double mushroom_mean_reward(bool is_poisonous, ActionId action) {
  check_action(action, 2);
  if (action == kAbstain) return 0.0;
  return is_poisonous ? -15.0 : 5.0;
}

double mushroom_reward(bool is_poisonous, ActionId action, Rng& rng) {
  check_action(action, 2);
  if (action == kAbstain) return 0.0;
  if (!is_poisonous) return 5.0;
  return rng.uniform() < 0.5 ? 5.0 : -35.0;
}

double dosage_level(ActionId level, int k, double lo, double hi) {
  if (k < 2) throw ConfigError("dosage needs at least two levels");
  check_action(level, k);
  return lo + level * (hi - lo) / (k - 1);
}

double dosage_reward(double optimal, ActionId chosen, int k, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("dosage range needs lo < hi");
  return 1.0 - std::abs(dosage_level(chosen, k, lo, hi) - optimal) / (hi - lo);
}

SupervisedData load_supervised_csv(const SupervisedBanditSpec& spec) {
  const csv::Table t = csv::read(spec.csv_path);
  const auto label_col = t.column(spec.label_column);
  if (!label_col) throw IngestError("label column not found", -1, spec.label_column);
  if (t.rows.empty()) throw IngestError("dataset has no rows");

  std::vector<std::size_t> cols;
  if (spec.feature_columns.empty()) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c != *label_col) cols.push_back(c);
    }
  } else {
    for (const auto& name : spec.feature_columns) {
      const auto c = t.column(name);
      if (!c) throw IngestError("feature column not found", -1, name);
      cols.push_back(*c);
    }
  }

  const std::size_t n = t.rows.size();
  SupervisedData data;
  std::vector<std::vector<double>> columns;  // encoded feature columns

  for (std::size_t c : cols) {
    const std::string& name = t.header[c];
    auto it = spec.column_types.find(name);
    ColumnType type = it == spec.column_types.end() ? ColumnType::automatic : it->second;
    std::vector<double> values(n);
    bool numeric = type != ColumnType::categorical;
    if (numeric) {
      for (std::size_t r = 0; r < n; ++r) {
        const auto v = csv::parse_double(t.rows[r][c]);
        if (!v || !std::isfinite(*v)) {
          if (type == ColumnType::numeric) {
            throw IngestError("non-numeric cell '" + t.rows[r][c] + "'", static_cast<long>(r + 1), name);
          }
          numeric = false;
          break;
        }
        values[r] = *v;
      }
    }
    if (numeric) {
      const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      const double lo = *mn;
      const double span = *mx - *mn;
      for (double& v : values) v = span > 0.0 ? (v - lo) / span : 0.0;
      columns.push_back(std::move(values));
      data.feature_names.push_back(name);
    } else {
      std::set<std::string> cats;
      for (const auto& row : t.rows) cats.insert(row[c]);
      for (const auto& cat : cats) {
        std::vector<double> onehot(n);
        for (std::size_t r = 0; r < n; ++r) onehot[r] = t.rows[r][c] == cat ? 1.0 : 0.0;
        columns.push_back(std::move(onehot));
        data.feature_names.push_back(name + "=" + cat);
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(spec.shuffle_seed);
  std::shuffle(order.begin(), order.end(), shuffle.engine());

  const auto d = static_cast<Eigen::Index>(columns.size());
  data.contexts.reserve(n);
  data.labels.reserve(n);
  for (std::size_t r : order) {
    Vector x(d);
    for (Eigen::Index j = 0; j < d; ++j) x[j] = columns[static_cast<std::size_t>(j)][r];
    data.contexts.push_back(std::move(x));
    data.labels.push_back(t.rows[r][*label_col]);
  }
  return data;
}

namespace {

int dataset_dim(const SupervisedData& data) {
  if (data.contexts.empty()) throw IngestError("dataset has no rows");
  return static_cast<int>(data.contexts.front().size());
}

}  // namespace

MushroomBandit::MushroomBandit(SupervisedData data, std::string positive_label)
    : data_(std::move(data)), dim_(dataset_dim(data_)) {
  poisonous_.reserve(data_.labels.size());
  for (const auto& l : data_.labels) poisonous_.push_back(l == positive_label);
}

Round MushroomBandit::next(Rng& rng) {
  const auto row = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.contexts.size())));
  Vector means(2);
  means[kEat] = mushroom_mean_reward(poisonous_[row], kEat);
  means[kAbstain] = 0.0;
  return {data_.contexts[row], std::move(means), row};
}

double MushroomBandit::reward(const Round& round, ActionId action, Rng& rng) const {
  return mushroom_reward(poisonous_.at(round.row), action, rng);
}

DosageBandit::DosageBandit(SupervisedData data, int k_levels)
    : data_(std::move(data)), dim_(dataset_dim(data_)), k_(k_levels) {
  if (k_ < 2) throw ConfigError("dosage needs at least two levels");
  long row = 0;
  for (const auto& l : data_.labels) {
    ++row;
    const auto v = csv::parse_double(l);
    if (!v) throw IngestError("non-numeric optimal dose '" + l + "'", row);
    optimal_.push_back(*v);
  }
  const auto [mn, mx] = std::minmax_element(optimal_.begin(), optimal_.end());
  lo_ = *mn;
  hi_ = *mx;
  if (!(lo_ < hi_)) throw IngestError("optimal doses are all equal");
}

Round DosageBandit::next(Rng& rng) {
  const auto row = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.contexts.size())));
  Vector means(k_);
  for (int a = 0; a < k_; ++a) means[a] = dosage_reward(optimal_[row], a, k_, lo_, hi_);
  return {data_.contexts[row], std::move(means), row};
}

double DosageBandit::reward(const Round& round, ActionId action, Rng&) const {
  check_action(action, k_);
  return round.mean_rewards[action];
}

ClassificationBandit::ClassificationBandit(SupervisedData data)
    : data_(std::move(data)), dim_(dataset_dim(data_)) {
  std::set<std::string> unique(data_.labels.begin(), data_.labels.end());
  classes_.assign(unique.begin(), unique.end());
  if (classes_.size() < 2) throw IngestError("classification bandit needs at least two labels");
  for (const auto& l : data_.labels) {
    label_index_.push_back(static_cast<ActionId>(
        std::lower_bound(classes_.begin(), classes_.end(), l) - classes_.begin()));
  }
}

Round ClassificationBandit::next(Rng& rng) {
  const auto row = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.contexts.size())));
  Vector means = Vector::Zero(num_actions());
  means[label_index_[row]] = 1.0;
  return {data_.contexts[row], std::move(means), row};
}

double ClassificationBandit::reward(const Round& round, ActionId action, Rng&) const {
  check_action(action, num_actions());
  return round.mean_rewards[action];
}

// --- Synthetic stand-ins -----------------------------------------------------

VideoTranscodeBandit::VideoTranscodeBandit(int k) : k_(k) {
  if (k < 2) throw ConfigError("video bandit needs at least two quality levels");
}

double VideoTranscodeBandit::success_probability(const Context& s, ActionId action) const {
  check_action(action, k_);
  // s = (bandwidth, file_size, resolution, bitrate, wifi, latency)
  const double z = 1.5 + 3.0 * s[0] - 2.0 * s[1] - 0.5 * s[2] - 0.5 * s[3] + 1.0 * s[4] -
                   1.0 * s[5] - 3.5 * action / (k_ - 1);
  return 1.0 / (1.0 + std::exp(-z));
}

Round VideoTranscodeBandit::next(Rng& rng) {
  Vector s(6);
  for (int j = 0; j < 6; ++j) s[j] = rng.uniform();
  s[4] = rng.uniform() < 0.6 ? 1.0 : 0.0;
  Vector means(k_);
  for (int a = 0; a < k_; ++a) {
    means[a] = success_probability(s, a) * (a + 1.0) / k_;
  }
  return {std::move(s), std::move(means), 0};
}

double VideoTranscodeBandit::reward(const Round& round, ActionId action, Rng& rng) const {
  return rng.uniform() < success_probability(round.context, action) ? (action + 1.0) / k_ : 0.0;
}

namespace {

struct CategoricalColumn {
  const char* name;
  std::vector<std::string> values;
};

std::vector<CategoricalColumn> mushroom_schema() {
  auto letters = [](const char* s) {
    std::vector<std::string> out;
    for (const char* c = s; *c; ++c) out.emplace_back(1, *c);
    return out;
  };
  return {
      {"cap-shape", letters("bcxfks")},
      {"cap-surface", letters("fgys")},
      {"cap-color", letters("nbcgrpuewy")},
      {"bruises", letters("tf")},
      {"odor", letters("alcyfmnps")},
      {"gill-attachment", letters("af")},
      {"gill-spacing", letters("cw")},
      {"gill-size", letters("bn")},
      {"gill-color", letters("knbhgropuewy")},
      {"stalk-shape", letters("et")},
      {"stalk-root", letters("bcerm")},
      {"stalk-surface-above-ring", letters("fyks")},
      {"stalk-surface-below-ring", letters("fyks")},
      {"stalk-color-above-ring", letters("nbcgopewy")},
      {"stalk-color-below-ring", letters("nbcgopewy")},
      {"veil-type", letters("p")},
      {"veil-color", letters("nowy")},
      {"ring-number", letters("not")},
      {"ring-type", letters("eflnp")},
      {"spore-print-color", letters("knbhrouwy")},
      {"population", letters("acnsvy")},
      {"habitat", letters("glmpuwd")},
  };
}

std::string pick(const std::vector<std::pair<std::string, double>>& weighted, Rng& rng) {
  std::vector<double> w;
  for (const auto& [_, p] : weighted) w.push_back(p);
  return weighted[static_cast<std::size_t>(rng.categorical(w))].first;
}

}  // namespace

void write_synthetic_mushroom_csv(const std::filesystem::path& path, std::size_t n, Rng& rng) {
  const auto schema = mushroom_schema();
  csv::Writer w(path);
  for (const auto& col : schema) w.field(col.name);
  w.field("class");
  w.end_row();
  for (std::size_t i = 0; i < n; ++i) {
    const bool poisonous = rng.uniform() < 0.48;
    for (const auto& col : schema) {
      std::string v;
      const std::string name = col.name;
      if (i < 12) {
        // Leading rows cycle through every category so the encoding is always 117 wide.
        v = col.values[i % col.values.size()];
      } else if (name == "odor") {
        v = poisonous ? pick({{"f", .55}, {"y", .12}, {"s", .12}, {"p", .06}, {"c", .04}, {"m", .01}, {"n", .10}}, rng)
                      : pick({{"n", .80}, {"a", .10}, {"l", .10}}, rng);
      } else if (name == "spore-print-color") {
        v = poisonous ? pick({{"w", .45}, {"h", .40}, {"r", .05}, {"k", .05}, {"n", .05}}, rng)
                      : pick({{"k", .38}, {"n", .40}, {"w", .12}, {"b", .02}, {"o", .02}, {"u", .02}, {"y", .02}, {"h", .02}}, rng);
      } else if (name == "gill-size") {
        v = poisonous ? pick({{"n", .6}, {"b", .4}}, rng) : pick({{"b", .9}, {"n", .1}}, rng);
      } else {
        v = col.values[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(col.values.size())))];
      }
      w.field(v);
    }
    w.field(poisonous ? "p" : "e");
    w.end_row();
  }
}

void write_synthetic_warfarin_csv(const std::filesystem::path& path, std::size_t n, Rng& rng) {
  csv::Writer w(path);
  for (const char* h : {"age", "weight", "height", "gender", "race", "vkorc1", "cyp2c9",
                        "amiodarone", "optimal_dose"}) {
    w.field(h);
  }
  w.end_row();
  const std::vector<std::string> genders{"female", "male"};
  const std::vector<std::string> races{"white", "asian", "black", "unknown"};
  const std::vector<std::string> vkorc1{"GG", "AG", "AA"};
  const std::vector<std::string> cyp{"11", "12", "other"};
  for (std::size_t i = 0; i < n; ++i) {
    const bool cycle = i < 4;
    const int age = 2 + rng.uniform_int(8);  // decades
    const double weight = std::clamp(78.0 + 18.0 * rng.normal(), 40.0, 150.0);
    const double height = std::clamp(168.0 + 10.0 * rng.normal(), 140.0, 200.0);
    const int g = cycle ? static_cast<int>(i % 2) : rng.uniform_int(2);
    const int r = cycle ? static_cast<int>(i % 4) : rng.categorical(std::vector<double>{.55, .25, .12, .08});
    const int v = cycle ? static_cast<int>(i % 3) : rng.categorical(std::vector<double>{.35, .45, .20});
    const int c = cycle ? static_cast<int>(i % 3) : rng.categorical(std::vector<double>{.75, .15, .10});
    const int amio = cycle ? static_cast<int>(i % 2) : (rng.uniform() < 0.07 ? 1 : 0);
    double root = 5.6044 - 0.2614 * age + 0.0087 * height + 0.0128 * weight;
    root -= v == 1 ? 0.8677 : v == 2 ? 1.6974 : 0.0;
    root -= c == 1 ? 0.5211 : c == 2 ? 0.9357 : 0.0;
    root -= r == 1 ? 0.1092 : r == 2 ? 0.2760 : r == 3 ? 0.1032 : 0.0;
    root -= amio ? 0.5503 : 0.0;
    root += 0.3 * rng.normal();
    const double dose = std::clamp(root * root, 5.0, 100.0);
    w.field(static_cast<long>(age * 10)).field(weight).field(height);
    w.field(genders[static_cast<std::size_t>(g)]).field(races[static_cast<std::size_t>(r)]);
    w.field(vkorc1[static_cast<std::size_t>(v)]).field(cyp[static_cast<std::size_t>(c)]);
    w.field(amio ? "yes" : "no").field(dose);
    w.end_row();
  }
}

// --- Logged data and replay ----------------------------------------------------

LoggedDataset LoggedDataset::read_csv(const std::filesystem::path& path, std::optional<int> k) {
  const csv::Table t = csv::read(path);
  const auto action_col = t.column("action");
  const auto reward_col = t.column("reward");
  if (!action_col) throw IngestError("logged dataset needs an 'action' column");
  if (!reward_col) throw IngestError("logged dataset needs a 'reward' column");
  std::vector<std::size_t> ctx_cols;
  for (std::size_t j = 0;; ++j) {
    const auto c = t.column("ctx_" + std::to_string(j));
    if (!c) break;
    ctx_cols.push_back(*c);
  }
  if (ctx_cols.empty()) throw IngestError("logged dataset needs ctx_0.. columns");
  LoggedDataset data;
  long row = 0;
  int max_action = -1;
  for (const auto& cells : t.rows) {
    ++row;
    auto number = [&](std::size_t c) {
      const auto v = csv::parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) throw IngestError("non-numeric cell '" + cells[c] + "'", row, t.header[c]);
      return *v;
    };
    LoggedTuple tup;
    tup.context.resize(static_cast<Eigen::Index>(ctx_cols.size()));
    for (std::size_t j = 0; j < ctx_cols.size(); ++j) tup.context[static_cast<Eigen::Index>(j)] = number(ctx_cols[j]);
    const double a = number(*action_col);
    if (a < 0 || a != std::floor(a)) throw IngestError("action must be a non-negative integer", row, "action");
    tup.action = static_cast<ActionId>(a);
    tup.reward = number(*reward_col);
    max_action = std::max(max_action, tup.action);
    data.tuples.push_back(std::move(tup));
  }
  data.num_actions = k.value_or(max_action + 1);
  for (std::size_t i = 0; i < data.tuples.size(); ++i) {
    if (data.tuples[i].action >= data.num_actions) {
      throw IngestError("logged action outside [0, k)", static_cast<long>(i + 1), "action");
    }
  }
  return data;
}

void LoggedDataset::write_csv(const std::filesystem::path& path) const {
  csv::Writer w(path);
  for (int j = 0; j < context_dim(); ++j) w.field("ctx_" + std::to_string(j));
  w.field("action").field("reward");
  w.end_row();
  for (const auto& t : tuples) {
    for (double x : t.context) w.field(x);
    w.field(static_cast<long>(t.action)).field(t.reward);
    w.end_row();
  }
}

LoggedDataset generate_logged(Environment& env, std::size_t n, Rng& rng) {
  LoggedDataset data;
  data.num_actions = env.num_actions();
  data.tuples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Round round = env.next(rng);
    const ActionId a = rng.uniform_int(env.num_actions());
    const double r = env.reward(round, a, rng);
    data.tuples.push_back({std::move(round.context), a, r});
  }
  return data;
}

std::optional<InteractionRecord> replay_step(const LoggedDataset& data, std::size_t& cursor,
                                             const DecisionPolicy& policy, Rng& rng, long step) {
  if (cursor >= data.tuples.size()) throw ExhaustedError("logged dataset exhausted");
  const LoggedTuple& t = data.tuples[cursor++];
  const ActionId a = policy.act(t.context, rng);
  if (a != t.action) return std::nullopt;
  return InteractionRecord{t.context, t.action, t.reward, step};
}

double ReplayResult::acceptance_rate() const {
  return consumed ? static_cast<double>(accepted.size()) / static_cast<double>(consumed) : 0.0;
}

double ReplayResult::mean_reward() const {
  if (accepted.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : accepted) s += r.reward;
  return s / static_cast<double>(accepted.size());
}

ReplayResult replay_evaluate(const LoggedDataset& data, const ReplayHooks& hooks,
                             long valid_steps, long batch_period, Rng& rng) {
  if (batch_period < 1) throw ConfigError("batch period must be >= 1");
  ReplayResult result;
  std::size_t cursor = 0;
  std::size_t period_start = 0;
  while (static_cast<long>(result.accepted.size()) < valid_steps) {
    if (cursor >= data.tuples.size()) {
      throw ExhaustedError("logged dataset exhausted after " + std::to_string(result.accepted.size()) +
                           " of " + std::to_string(valid_steps) + " valid steps");
    }
    auto rec = replay_step(data, cursor, hooks.policy(), rng,
                           static_cast<long>(result.accepted.size()) + 1);
    if (!rec) continue;
    result.accepted.push_back(std::move(*rec));
    if (hooks.on_period && result.accepted.size() - period_start == static_cast<std::size_t>(batch_period)) {
      hooks.on_period(std::span<const InteractionRecord>(result.accepted).subspan(period_start));
      period_start = result.accepted.size();
    }
  }
  result.consumed = cursor;
  return result;
}

ReplayResult replay_evaluate(const LoggedDataset& data, const DecisionPolicy& policy,
                             long valid_steps, Rng& rng) {
  ReplayHooks hooks{[&]() -> const DecisionPolicy& { return policy; }, {}};
  return replay_evaluate(data, hooks, valid_steps, valid_steps, rng);
}

}  // namespace tsil
