#pragma once

#include <vector>

#include "tsil/bayes_linear.hpp"
#include "tsil/neural.hpp"

namespace tsil {

/// NIG(0, c I, alpha, beta) for every action.
struct NigPriorSpec {
  double precision_scale = 0.25;
  double alpha = 6.0;
  double beta = 6.0;

  NigParams params(int feature_dim) const {
    return NigParams::isotropic(feature_dim, precision_scale, alpha, beta);
  }
};

/// Reward-network hyperparameters shared by the neural policies.
struct RewardNetConfig {
  std::vector<int> hidden{100, 100};
  RewardTrainingConfig training{};
  LrSchedule schedule{0.01, 0.55, 1};
  double rho = 0.9;
  double eps = 1e-8;
};

/// Samples one reward per arm from a set of NIG heads and returns the argmax, lowest index
/// on ties. `features` excludes the intercept.
ActionId sample_argmax(const std::vector<NigModel>& models, const Vector& features, Rng& rng);

/// Monte-Carlo action histogram of posterior-sample-then-argmax over `n_samples` draws.
/// Uses the scalar projection theta^T x = mu^T x + sigma ||L^-1 x|| xi, which has the same
/// law as sampling the full parameter vector.
ActionDistribution sample_argmax_histogram(const std::vector<NigModel>& models,
                                           const Vector& features, int n_samples, Rng& rng);

/// Disjoint exact Bayesian linear regression per action on the raw context.
class LinearTsPolicy final : public LearningPolicy {
 public:
  LinearTsPolicy(int context_dim, int k, NigPriorSpec prior = {});

  std::string name() const override { return "linear_ts"; }
  int context_dim() const override { return dim_; }
  int num_actions() const override { return static_cast<int>(models_.size()); }
  ActionDistribution distribution(const Context& context, int n_samples,
                                  Rng& rng) const override;
  std::unique_ptr<LearningPolicy> clone() const override;

  const NigModel& model(ActionId a) const { return models_.at(static_cast<std::size_t>(a)); }
  void set_posterior(ActionId a, NigParams posterior);

 protected:
  ActionId do_act(const Context& context, Rng& rng) const override;
  void do_update(std::span<const InteractionRecord> batch) override;

 private:
  int dim_;
  std::vector<NigModel> models_;
};

/// Greedy argmax of a multi-output reward network trained on all history.
class NeuralGreedyPolicy final : public LearningPolicy {
 public:
  NeuralGreedyPolicy(int context_dim, int k, RewardNetConfig config, std::uint64_t seed);

  std::string name() const override { return "neural_greedy"; }
  int context_dim() const override { return net_.input_dim(); }
  int num_actions() const override { return net_.output_dim(); }
  std::optional<ActionDistribution> exact_distribution(const Context& context) const override;
  std::unique_ptr<LearningPolicy> clone() const override;

  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }

 protected:
  ActionId do_act(const Context& context, Rng&) const override;
  void do_update(std::span<const InteractionRecord> batch) override;

 private:
  RewardNetConfig config_;
  Mlp net_;
  RmspropState optimizer_;
  Rng rng_;
  std::vector<InteractionRecord> history_;
};

/// Shared reward network; per-action NIG heads over its last hidden layer plus intercept.
class NeuralLinearTsPolicy final : public LearningPolicy {
 public:
  NeuralLinearTsPolicy(int context_dim, int k, RewardNetConfig config, NigPriorSpec prior,
                       std::uint64_t seed);

  std::string name() const override { return "neural_linear_ts"; }
  int context_dim() const override { return net_.input_dim(); }
  int num_actions() const override { return static_cast<int>(heads_.size()); }
  ActionDistribution distribution(const Context& context, int n_samples,
                                  Rng& rng) const override;
  std::unique_ptr<LearningPolicy> clone() const override;

  const Mlp& net() const { return net_; }
  const NigModel& head(ActionId a) const { return heads_.at(static_cast<std::size_t>(a)); }
  const std::vector<NigModel>& heads() const { return heads_; }
  /// Number of reward-net minibatches per update; 0 freezes the network.
  void set_training_steps(int n) { config_.training.n_steps = n; }

 protected:
  ActionId do_act(const Context& context, Rng& rng) const override;
  void do_update(std::span<const InteractionRecord> batch) override;

 private:
  RewardNetConfig config_;
  Mlp net_;
  RmspropState optimizer_;
  std::vector<NigModel> heads_;
  Rng rng_;
  std::vector<InteractionRecord> history_;
};

enum class BootstrapWeighting { poisson, resample };

/// B reward networks each trained on reweighted history; one is drawn per decision.
class BootstrapTsPolicy final : public LearningPolicy {
 public:
  BootstrapTsPolicy(int context_dim, int k, int replicates, RewardNetConfig config,
                    BootstrapWeighting weighting, std::uint64_t seed);

  std::string name() const override { return "bootstrap_ts"; }
  int context_dim() const override { return nets_.front().input_dim(); }
  int num_actions() const override { return nets_.front().output_dim(); }
  std::unique_ptr<LearningPolicy> clone() const override;

  int replicates() const { return static_cast<int>(nets_.size()); }
  const Mlp& net(int b) const { return nets_.at(static_cast<std::size_t>(b)); }
  Mlp& mutable_net(int b) { return nets_.at(static_cast<std::size_t>(b)); }
  /// Replicate chosen for the next decision drawn from `rng`.
  int select_replicate(Rng& rng) const;
  /// Example weights used by replicate b at the latest update.
  const std::vector<double>& weights(int b) const { return weights_.at(static_cast<std::size_t>(b)); }

 protected:
  ActionId do_act(const Context& context, Rng& rng) const override;
  void do_update(std::span<const InteractionRecord> batch) override;

 private:
  RewardNetConfig config_;
  BootstrapWeighting weighting_;
  std::vector<Mlp> nets_;
  std::vector<RmspropState> optimizers_;
  std::vector<std::vector<double>> weights_;
  Rng rng_;
  std::vector<InteractionRecord> history_;
};

}  // namespace tsil
