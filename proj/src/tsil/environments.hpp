#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsil/core.hpp"

namespace tsil {

/// One decision round: the context and the true mean reward of every action.
struct Round {
  Context context;
  Vector mean_rewards;
  std::size_t row = 0;  // source row for dataset-backed environments
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int context_dim() const = 0;
  virtual int num_actions() const = 0;

  /// Draws the next i.i.d. context.
  virtual Round next(Rng& rng) = 0;
  /// Observed (possibly noisy) reward for playing `action` in `round`.
  virtual double reward(const Round& round, ActionId action, Rng& rng) const = 0;
};

/// Instantaneous regret against the best mean; never negative.
double instant_regret(const Round& round, ActionId action);

// --- Wheel -----------------------------------------------------------------

struct WheelConfig {
  double delta = 0.95;
  double sigma = 0.01;
  double mean_hub = 1.2;
  double mean_inner = 1.0;
  double mean_spike = 50.0;

  void validate() const;
};

/// Spike arm for a context outside the radius: (+,+)->1, (-,+)->2, (-,-)->3, (+,-)->4.
/// Zero coordinates count as positive.
ActionId wheel_spike_arm(const Vector& context);

Vector wheel_mean_rewards(const WheelConfig& config, const Vector& context);

struct WheelSample {
  Context context;
  Vector mean_rewards;
};

/// Context uniform on the unit disk, with its five arm means.
WheelSample wheel_sample(const WheelConfig& config, Rng& rng);

class WheelBandit final : public Environment {
 public:
  explicit WheelBandit(WheelConfig config = {});

  std::string name() const override { return "wheel"; }
  int context_dim() const override { return 2; }
  int num_actions() const override { return 5; }
  Round next(Rng& rng) override;
  double reward(const Round& round, ActionId action, Rng& rng) const override;

  const WheelConfig& config() const { return config_; }

 private:
  WheelConfig config_;
};

// --- Supervised datasets ---------------------------------------------------

inline constexpr ActionId kEat = 0;
inline constexpr ActionId kAbstain = 1;

/// Abstain: 0. Eat a safe mushroom: +5. Eat a poisonous one: +5 or -35 with equal odds.
double mushroom_reward(bool is_poisonous, ActionId action, Rng& rng);
double mushroom_mean_reward(bool is_poisonous, ActionId action);

/// dose(i) = lo + i (hi - lo) / (k - 1); reward 1 - |dose(chosen) - optimal| / (hi - lo).
double dosage_level(ActionId level, int k, double lo, double hi);
double dosage_reward(double optimal, ActionId chosen, int k, double lo, double hi);

enum class RewardRule { mushroom, dosage, generic_table };
enum class ColumnType { automatic, numeric, categorical };

struct SupervisedBanditSpec {
  std::filesystem::path csv_path;
  /// Empty: every column except the label.
  std::vector<std::string> feature_columns;
  std::string label_column;
  RewardRule reward_rule = RewardRule::generic_table;
  int k_levels = 20;
  std::string positive_label = "p";  // mushroom: label value meaning poisonous
  std::map<std::string, ColumnType> column_types;
  std::uint64_t shuffle_seed = 0;
};

struct SupervisedData {
  std::vector<Context> contexts;
  std::vector<std::string> labels;
  std::vector<std::string> feature_names;  // one per context dimension
};

/// Min-max scales numeric columns to [0, 1] (constant columns map to 0), one-hot encodes
/// categorical columns (categories in sorted order), then shuffles rows by shuffle_seed.
/// Automatic columns are numeric when every cell parses as a number.
SupervisedData load_supervised_csv(const SupervisedBanditSpec& spec);

class MushroomBandit final : public Environment {
 public:
  MushroomBandit(SupervisedData data, std::string positive_label);

  std::string name() const override { return "mushroom"; }
  int context_dim() const override { return dim_; }
  int num_actions() const override { return 2; }
  Round next(Rng& rng) override;
  double reward(const Round& round, ActionId action, Rng& rng) const override;

 private:
  SupervisedData data_;
  std::vector<bool> poisonous_;
  int dim_;
};

/// Discretized dosage levels; [lo, hi] is the observed range of optimal doses.
class DosageBandit final : public Environment {
 public:
  DosageBandit(SupervisedData data, int k_levels);

  std::string name() const override { return "dosage"; }
  int context_dim() const override { return dim_; }
  int num_actions() const override { return k_; }
  Round next(Rng& rng) override;
  double reward(const Round& round, ActionId action, Rng& rng) const override;

  double low() const { return lo_; }
  double high() const { return hi_; }

 private:
  SupervisedData data_;
  std::vector<double> optimal_;
  int dim_;
  int k_;
  double lo_;
  double hi_;
};

/// One action per distinct label (sorted); reward 1 for the correct label, else 0.
class ClassificationBandit final : public Environment {
 public:
  explicit ClassificationBandit(SupervisedData data);

  std::string name() const override { return "classification"; }
  int context_dim() const override { return dim_; }
  int num_actions() const override { return static_cast<int>(classes_.size()); }
  Round next(Rng& rng) override;
  double reward(const Round& round, ActionId action, Rng& rng) const override;

  const std::vector<std::string>& classes() const { return classes_; }

 private:
  SupervisedData data_;
  std::vector<std::string> classes_;
  std::vector<ActionId> label_index_;
  int dim_;
};

// --- Synthetic stand-ins -----------------------------------------------------

/// Upload-transcoding stand-in: k quality levels ordered by quality; an upload succeeds
/// with probability sigmoid(w^T s - c * level) and pays (level + 1) / k on success, 0 on
/// failure. Illustrative only.
class VideoTranscodeBandit final : public Environment {
 public:
  explicit VideoTranscodeBandit(int k = 7);

  std::string name() const override { return "video"; }
  int context_dim() const override { return 6; }
  int num_actions() const override { return k_; }
  Round next(Rng& rng) override;
  double reward(const Round& round, ActionId action, Rng& rng) const override;

  double success_probability(const Context& context, ActionId action) const;

 private:
  int k_;
};

/// Mushroom-schema CSV: 22 categorical columns (117 one-hot features) plus "class" (p/e).
void write_synthetic_mushroom_csv(const std::filesystem::path& path, std::size_t n, Rng& rng);
/// Warfarin-schema CSV: 3 numeric + 4 categorical columns (17 features) plus "optimal_dose".
void write_synthetic_warfarin_csv(const std::filesystem::path& path, std::size_t n, Rng& rng);

// --- Logged data and replay ----------------------------------------------------

struct LoggedTuple {
  Context context;
  ActionId action = 0;
  double reward = 0.0;
};

/// Tuples logged under a uniform-random policy over k actions.
struct LoggedDataset {
  int num_actions = 0;
  std::vector<LoggedTuple> tuples;

  int context_dim() const { return tuples.empty() ? 0 : static_cast<int>(tuples.front().context.size()); }

  /// Columns ctx_0..ctx_{d-1}, action, reward. k defaults to max(action) + 1.
  static LoggedDataset read_csv(const std::filesystem::path& path, std::optional<int> k = {});
  void write_csv(const std::filesystem::path& path) const;
};

/// Logs n rounds of `env` under the uniform policy.
LoggedDataset generate_logged(Environment& env, std::size_t n, Rng& rng);

/// One rejection-sampling step at `cursor` (which is advanced): the candidate policy
/// samples an action; the logged tuple is kept only if it matches.
std::optional<InteractionRecord> replay_step(const LoggedDataset& data, std::size_t& cursor,
                                             const DecisionPolicy& policy, Rng& rng, long step);

struct ReplayResult {
  std::vector<InteractionRecord> accepted;
  std::size_t consumed = 0;

  double acceptance_rate() const;
  double mean_reward() const;
};

/// Callbacks for replaying a learning agent: `policy` returns the currently deployed
/// policy; `on_period` receives each completed batch of accepted records.
struct ReplayHooks {
  std::function<const DecisionPolicy&()> policy;
  std::function<void(std::span<const InteractionRecord>)> on_period;
};

/// Replays until `valid_steps` tuples are accepted, calling on_period every
/// `batch_period` accepted steps. Throws ExhaustedError if the stream ends first.
ReplayResult replay_evaluate(const LoggedDataset& data, const ReplayHooks& hooks,
                             long valid_steps, long batch_period, Rng& rng);

/// Replay of a fixed policy.
ReplayResult replay_evaluate(const LoggedDataset& data, const DecisionPolicy& policy,
                             long valid_steps, Rng& rng);

}  // namespace tsil
