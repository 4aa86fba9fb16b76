#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsil/errors.hpp"
#include "tsil/rng.hpp"

namespace tsil {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Features of one decision; numeric features normalized to [0, 1].
using Context = Vector;

/// Index into the action set, 0 <= a < k.
using ActionId = int;

struct InteractionRecord {
  Context context;
  ActionId action = 0;
  double reward = 0.0;
  long step = 0;
};

/// A probability vector over k actions.
class ActionDistribution {
 public:
  ActionDistribution() = default;
  /// Validates non-negativity and unit sum (within 1e-9).
  explicit ActionDistribution(Vector probs);

  static ActionDistribution uniform(int k);
  static ActionDistribution one_hot(int k, ActionId a);
  /// Normalizes counts into frequencies.
  static ActionDistribution from_counts(std::span<const long> counts);

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int a) const { return probs_[a]; }
  const Vector& probs() const { return probs_; }

 private:
  Vector probs_;
};

void check_finite(const Vector& v, const char* what);
void check_dim(const Vector& v, int expected, const char* what);
void check_action(ActionId a, int k);

/// Lowest-index argmax; ties go to the smallest ActionId.
ActionId argmax(const Vector& scores);

/// Stable softmax of a logit vector.
Vector softmax(const Vector& logits);

/// The online half of a policy: act and report its action distribution.
class DecisionPolicy {
 public:
  virtual ~DecisionPolicy() = default;

  virtual std::string name() const = 0;
  virtual int context_dim() const = 0;
  virtual int num_actions() const = 0;

  /// Draws one action; deterministic given policy state, context and rng state.
  ActionId act(const Context& context, Rng& rng) const;

  /// Exact conditional distribution when the policy has one in closed form.
  virtual std::optional<ActionDistribution> exact_distribution(const Context&) const {
    return std::nullopt;
  }

  /// Exact distribution when available, otherwise an n_samples Monte-Carlo histogram.
  virtual ActionDistribution distribution(const Context& context, int n_samples,
                                          Rng& rng) const;

 protected:
  virtual ActionId do_act(const Context& context, Rng& rng) const = 0;
};

/// A policy that also learns from batches of interaction records (offline phase).
class LearningPolicy : public DecisionPolicy {
 public:
  /// Consumes the batch once; repeating a batch counts it twice.
  void update(std::span<const InteractionRecord> batch);

  virtual std::unique_ptr<LearningPolicy> clone() const = 0;

 protected:
  virtual void do_update(std::span<const InteractionRecord> batch) = 0;
};

/// Uniform over k actions; ignores context and updates.
class UniformRandomPolicy final : public LearningPolicy {
 public:
  UniformRandomPolicy(int context_dim, int k);

  std::string name() const override { return "uniform"; }
  int context_dim() const override { return dim_; }
  int num_actions() const override { return k_; }
  std::optional<ActionDistribution> exact_distribution(const Context&) const override;
  std::unique_ptr<LearningPolicy> clone() const override;

 protected:
  ActionId do_act(const Context&, Rng& rng) const override;
  void do_update(std::span<const InteractionRecord>) override {}

 private:
  int dim_;
  int k_;
};

/// Always plays the same action.
class FixedActionPolicy final : public DecisionPolicy {
 public:
  FixedActionPolicy(int context_dim, int k, ActionId action);

  std::string name() const override { return "fixed"; }
  int context_dim() const override { return dim_; }
  int num_actions() const override { return k_; }
  std::optional<ActionDistribution> exact_distribution(const Context&) const override;

 protected:
  ActionId do_act(const Context&, Rng&) const override { return action_; }

 private:
  int dim_;
  int k_;
  ActionId action_;
};

/// Softmax over affine logits W s + b.
class LinearSoftmaxPolicy final : public DecisionPolicy {
 public:
  LinearSoftmaxPolicy(Matrix weights, Vector bias);

  std::string name() const override { return "linear_softmax"; }
  int context_dim() const override { return static_cast<int>(weights_.cols()); }
  int num_actions() const override { return static_cast<int>(weights_.rows()); }
  std::optional<ActionDistribution> exact_distribution(const Context& context) const override;

 protected:
  ActionId do_act(const Context& context, Rng& rng) const override;

 private:
  Matrix weights_;
  Vector bias_;
};

/// Runs fn(i) for i in [0, n) across up to `workers` threads; workers <= 1 runs inline.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

int default_workers();

}  // namespace tsil
