#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tsil/divergences.hpp"
#include "tsil/neural.hpp"
#include "tsil/transport.hpp"

namespace tsil {

/// Monte-Carlo estimates of a Thompson-sampling policy's action probabilities at a set
/// of contexts; the distillation training set.
struct PropensityTable {
  std::vector<Context> contexts;
  std::vector<ActionDistribution> propensities;
  int n_simulated = 0;

  std::size_t size() const { return contexts.size(); }
  bool empty() const { return contexts.empty(); }
  int context_dim() const { return contexts.empty() ? 0 : static_cast<int>(contexts.front().size()); }
  int num_actions() const { return propensities.empty() ? 0 : propensities.front().size(); }
  void validate() const;

  /// Header ctx_0..ctx_{d-1},p_0..p_{k-1}; one row per context.
  void write_csv(const std::filesystem::path& path) const;
  static PropensityTable read_csv(const std::filesystem::path& path);
};

/// Row i is the histogram of n_a actions of `policy` at contexts[i]. Each row draws from
/// its own stream derived from (seed, i), so the table does not depend on `workers`.
PropensityTable simulate_propensities(const DecisionPolicy& policy,
                                      std::span<const Context> contexts, int n_a,
                                      std::uint64_t seed, int workers = 1);

/// Explicit policy: tanh MLP with a softmax head; acting is a single categorical draw.
class ImitationPolicy final : public DecisionPolicy {
 public:
  explicit ImitationPolicy(Mlp net);
  ImitationPolicy(int context_dim, int k, std::vector<int> hidden, Rng& init_rng);

  std::string name() const override { return "imitation"; }
  int context_dim() const override { return net_.input_dim(); }
  int num_actions() const override { return net_.output_dim(); }
  std::optional<ActionDistribution> exact_distribution(const Context& context) const override;

  const Mlp& net() const { return net_; }
  void set_params(MlpParams params);
  /// One RMSProp step on the weights.
  void step(RmspropState& optimizer, const MlpParams& grad);

 protected:
  /// Forward pass on a single-precision copy of the weights.
  ActionId do_act(const Context& context, Rng& rng) const override;

 private:
  void compile();

  Mlp net_;
  std::vector<Eigen::MatrixXf> weights_f_;
  std::vector<Eigen::VectorXf> biases_f_;
};

enum class DistillObjective { kl, wasserstein };

struct DistillConfig {
  int n_minibatches = 2000;
  int batch_size = 64;
  LrSchedule schedule{0.001, 0.05, 100};
  double rho = 0.9;
  double eps = 1e-8;
  /// Train on one sampled action per context instead of the soft propensities.
  bool hard_samples = false;
  /// Wasserstein objective: policy samples per context and baseline subtraction.
  int n_policy_samples = 16;
  bool baseline = true;
};

struct DistillReport {
  double initial_kl = 0.0;
  double final_kl = 0.0;
  std::optional<double> initial_w1;
  std::optional<double> final_w1;
  /// Per-minibatch objective: mean KL for the KL objective, mean W1 for Wasserstein.
  std::vector<double> trace;
};

/// Mean KL(smoothed target || policy) over the table.
double mean_table_kl(const PropensityTable& table, const DecisionPolicy& policy);
/// Mean W1(target, policy) over the table.
double mean_table_w1(const PropensityTable& table, const DecisionPolicy& policy,
                     const ActionMetric& metric);

/// Minimizes per-example cross-entropy -sum_a target(a) log policy(a | s) with RMSProp,
/// warm-started from the policy's current parameters. The learning-rate schedule of
/// `optimizer` is restarted.
DistillReport distill_kl(const PropensityTable& table, ImitationPolicy& policy,
                         RmspropState& optimizer, const DistillConfig& config, Rng& rng);

/// Score-function gradient of W1(target, policy(. | s)) for one context: the average over
/// sampled A ~ policy of -(g*(A) - b) grad log policy(A | s), with g* the optimal
/// Kantorovich potential and b = E_policy[g*] (when `baseline`).
MlpParams wasserstein_policy_gradient(const Context& context, const ActionDistribution& target,
                                      const ImitationPolicy& policy, const ActionMetric& metric,
                                      int n_policy_samples, Rng& rng, bool baseline = true);

/// Same estimator with the expectation over A taken exactly.
MlpParams wasserstein_policy_gradient_exact(const Context& context,
                                            const ActionDistribution& target,
                                            const ImitationPolicy& policy,
                                            const ActionMetric& metric);

DistillReport distill_wasserstein(const PropensityTable& table, ImitationPolicy& policy,
                                  RmspropState& optimizer, const ActionMetric& metric,
                                  const DistillConfig& config, Rng& rng);

/// Optimizer state shaped for `policy` with the config's schedule.
RmspropState make_distill_optimizer(const ImitationPolicy& policy, const DistillConfig& config);

}  // namespace tsil
