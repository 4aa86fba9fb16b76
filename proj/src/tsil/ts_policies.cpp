#include "tsil/ts_policies.hpp"

#include <cmath>

namespace tsil {

ActionId sample_argmax(const std::vector<NigModel>& models, const Vector& features, Rng& rng) {
  ActionId best = 0;
  double best_score = 0.0;
  for (std::size_t a = 0; a < models.size(); ++a) {
    const double s = models[a].sample_reward(features, rng);
    if (a == 0 || s > best_score) {
      best = static_cast<ActionId>(a);
      best_score = s;
    }
  }
  return best;
}

ActionDistribution sample_argmax_histogram(const std::vector<NigModel>& models,
                                           const Vector& features, int n_samples, Rng& rng) {
  if (n_samples < 1) throw DimensionError("n_samples must be >= 1");
  const std::size_t k = models.size();
  std::vector<NigModel::Projection> proj(k);
  for (std::size_t a = 0; a < k; ++a) proj[a] = models[a].project(features);
  std::vector<long> counts(k, 0);
  for (int j = 0; j < n_samples; ++j) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      const auto& post = models[a].posterior();
      const double sigma = std::sqrt(rng.inverse_gamma(post.alpha, post.beta));
      const double s = proj[a].mean + sigma * proj[a].scale * rng.normal();
      if (a == 0 || s > best_score) {
        best = a;
        best_score = s;
      }
    }
    ++counts[best];
  }
  return ActionDistribution::from_counts(counts);
}

// ---------------------------------------------------------------------------

LinearTsPolicy::LinearTsPolicy(int context_dim, int k, NigPriorSpec prior) : dim_(context_dim) {
  if (k < 1 || context_dim < 0) throw DimensionError("linear TS needs k >= 1");
  models_.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) models_.emplace_back(prior.params(context_dim + 1));
}

ActionDistribution LinearTsPolicy::distribution(const Context& context, int n_samples,
                                                Rng& rng) const {
  check_dim(context, dim_, "context");
  return sample_argmax_histogram(models_, context, n_samples, rng);
}

std::unique_ptr<LearningPolicy> LinearTsPolicy::clone() const {
  return std::make_unique<LinearTsPolicy>(*this);
}

void LinearTsPolicy::set_posterior(ActionId a, NigParams posterior) {
  check_action(a, num_actions());
  models_[static_cast<std::size_t>(a)].set_posterior(std::move(posterior));
}

ActionId LinearTsPolicy::do_act(const Context& context, Rng& rng) const {
  return sample_argmax(models_, context, rng);
}

void LinearTsPolicy::do_update(std::span<const InteractionRecord> batch) {
  std::vector<bool> touched(models_.size(), false);
  for (const auto& r : batch) {
    models_[static_cast<std::size_t>(r.action)].observe(r.context, r.reward);
    touched[static_cast<std::size_t>(r.action)] = true;
  }
  for (std::size_t a = 0; a < models_.size(); ++a) {
    if (touched[a]) models_[a].refresh();
  }
}

// ---------------------------------------------------------------------------

namespace {

MlpSpec reward_net_spec(int context_dim, int k, const RewardNetConfig& config) {
  return {context_dim, config.hidden, Activation::relu, k, OutputHead::linear};
}

}  // namespace

NeuralGreedyPolicy::NeuralGreedyPolicy(int context_dim, int k, RewardNetConfig config,
                                       std::uint64_t seed)
    : config_(std::move(config)),
      net_([&] {
        Rng init(derive_seed(seed, 0));
        return Mlp::initialize(reward_net_spec(context_dim, k, config_), init);
      }()),
      optimizer_(net_.params(), config_.schedule, config_.rho, config_.eps),
      rng_(derive_seed(seed, 1)) {}

std::optional<ActionDistribution> NeuralGreedyPolicy::exact_distribution(
    const Context& context) const {
  return ActionDistribution::one_hot(num_actions(), argmax(net_.logits(context)));
}

std::unique_ptr<LearningPolicy> NeuralGreedyPolicy::clone() const {
  return std::make_unique<NeuralGreedyPolicy>(*this);
}

ActionId NeuralGreedyPolicy::do_act(const Context& context, Rng&) const {
  return argmax(net_.logits(context));
}

void NeuralGreedyPolicy::do_update(std::span<const InteractionRecord> batch) {
  history_.insert(history_.end(), batch.begin(), batch.end());
  train_reward_net(net_, optimizer_, history_, config_.training, rng_);
}

// ---------------------------------------------------------------------------

NeuralLinearTsPolicy::NeuralLinearTsPolicy(int context_dim, int k, RewardNetConfig config,
                                           NigPriorSpec prior, std::uint64_t seed)
    : config_(std::move(config)),
      net_([&] {
        Rng init(derive_seed(seed, 0));
        return Mlp::initialize(reward_net_spec(context_dim, k, config_), init);
      }()),
      optimizer_(net_.params(), config_.schedule, config_.rho, config_.eps),
      rng_(derive_seed(seed, 1)) {
  heads_.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) heads_.emplace_back(prior.params(net_.feature_dim() + 1));
}

ActionDistribution NeuralLinearTsPolicy::distribution(const Context& context, int n_samples,
                                                      Rng& rng) const {
  check_dim(context, context_dim(), "context");
  return sample_argmax_histogram(heads_, net_.features(context), n_samples, rng);
}

std::unique_ptr<LearningPolicy> NeuralLinearTsPolicy::clone() const {
  return std::make_unique<NeuralLinearTsPolicy>(*this);
}

ActionId NeuralLinearTsPolicy::do_act(const Context& context, Rng& rng) const {
  return sample_argmax(heads_, net_.features(context), rng);
}

void NeuralLinearTsPolicy::do_update(std::span<const InteractionRecord> batch) {
  history_.insert(history_.end(), batch.begin(), batch.end());
  if (config_.training.n_steps > 0) {
    train_reward_net(net_, optimizer_, history_, config_.training, rng_);
  }
  // Features drift with the network, so the heads are refit on all history.
  Matrix x(context_dim(), static_cast<Eigen::Index>(history_.size()));
  for (std::size_t i = 0; i < history_.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = history_[i].context;
  }
  const Matrix phi = net_.features_batch(x);
  for (auto& h : heads_) h.reset();
  for (std::size_t i = 0; i < history_.size(); ++i) {
    heads_[static_cast<std::size_t>(history_[i].action)].observe(
        phi.col(static_cast<Eigen::Index>(i)), history_[i].reward);
  }
  for (auto& h : heads_) h.refresh();
}

// ---------------------------------------------------------------------------

BootstrapTsPolicy::BootstrapTsPolicy(int context_dim, int k, int replicates,
                                     RewardNetConfig config, BootstrapWeighting weighting,
                                     std::uint64_t seed)
    : config_(std::move(config)), weighting_(weighting), rng_(derive_seed(seed, 1)) {
  if (replicates < 1) throw ConfigError("bootstrap needs at least one replicate");
  const MlpSpec spec = reward_net_spec(context_dim, k, config_);
  for (int b = 0; b < replicates; ++b) {
    Rng init(derive_seed(seed, 100 + static_cast<std::uint64_t>(b)));
    nets_.push_back(Mlp::initialize(spec, init));
    optimizers_.emplace_back(nets_.back().params(), config_.schedule, config_.rho, config_.eps);
  }
  weights_.resize(nets_.size());
}

std::unique_ptr<LearningPolicy> BootstrapTsPolicy::clone() const {
  return std::make_unique<BootstrapTsPolicy>(*this);
}

int BootstrapTsPolicy::select_replicate(Rng& rng) const { return rng.uniform_int(replicates()); }

ActionId BootstrapTsPolicy::do_act(const Context& context, Rng& rng) const {
  return argmax(nets_[static_cast<std::size_t>(select_replicate(rng))].logits(context));
}

void BootstrapTsPolicy::do_update(std::span<const InteractionRecord> batch) {
  history_.insert(history_.end(), batch.begin(), batch.end());
  const std::size_t n = history_.size();
  for (std::size_t b = 0; b < nets_.size(); ++b) {
    auto& w = weights_[b];
    w.assign(n, 0.0);
    if (weighting_ == BootstrapWeighting::poisson) {
      for (auto& wi : w) wi = rng_.poisson(1.0);
    } else {
      for (std::size_t i = 0; i < n; ++i) w[static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(n)))] += 1.0;
    }
    train_reward_net(nets_[b], optimizers_[b], history_, config_.training, rng_, w);
  }
}

}  // namespace tsil
