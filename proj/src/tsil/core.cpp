#include "tsil/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace tsil {

ActionDistribution::ActionDistribution(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw DimensionError("action distribution over zero actions");
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw NumericalError("action probability must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw NumericalError("action probabilities sum to " + std::to_string(total));
  }
}

ActionDistribution ActionDistribution::uniform(int k) {
  return ActionDistribution(Vector::Constant(k, 1.0 / k));
}

ActionDistribution ActionDistribution::one_hot(int k, ActionId a) {
  check_action(a, k);
  Vector p = Vector::Zero(k);
  p[a] = 1.0;
  return ActionDistribution(std::move(p));
}

ActionDistribution ActionDistribution::from_counts(std::span<const long> counts) {
  long total = 0;
  for (long c : counts) total += c;
  if (total <= 0) throw DimensionError("empty action histogram");
  Vector p(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t a = 0; a < counts.size(); ++a) {
    p[static_cast<Eigen::Index>(a)] = static_cast<double>(counts[a]) / total;
  }
  return ActionDistribution(std::move(p));
}

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " has non-finite entries");
}

void check_dim(const Vector& v, int expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(expected));
  }
}

void check_action(ActionId a, int k) {
  if (a < 0 || a >= k) {
    throw DimensionError("action " + std::to_string(a) + " outside [0, " +
                         std::to_string(k) + ")");
  }
}

ActionId argmax(const Vector& scores) {
  ActionId best = 0;
  for (Eigen::Index a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[best]) best = static_cast<ActionId>(a);
  }
  return best;
}

Vector softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

ActionId DecisionPolicy::act(const Context& context, Rng& rng) const {
  check_dim(context, context_dim(), "context");
  return do_act(context, rng);
}

ActionDistribution DecisionPolicy::distribution(const Context& context, int n_samples,
                                                Rng& rng) const {
  check_dim(context, context_dim(), "context");
  if (auto exact = exact_distribution(context)) return *exact;
  if (n_samples < 1) throw DimensionError("n_samples must be >= 1");
  std::vector<long> counts(static_cast<std::size_t>(num_actions()), 0);
  for (int j = 0; j < n_samples; ++j) ++counts[static_cast<std::size_t>(do_act(context, rng))];
  return ActionDistribution::from_counts(counts);
}

void LearningPolicy::update(std::span<const InteractionRecord> batch) {
  for (const auto& r : batch) {
    check_dim(r.context, context_dim(), "record context");
    check_action(r.action, num_actions());
  }
  if (batch.empty()) return;
  do_update(batch);
}

UniformRandomPolicy::UniformRandomPolicy(int context_dim, int k) : dim_(context_dim), k_(k) {
  if (k < 1 || context_dim < 0) throw DimensionError("uniform policy needs k >= 1");
}

std::optional<ActionDistribution> UniformRandomPolicy::exact_distribution(const Context&) const {
  return ActionDistribution::uniform(k_);
}

std::unique_ptr<LearningPolicy> UniformRandomPolicy::clone() const {
  return std::make_unique<UniformRandomPolicy>(*this);
}

ActionId UniformRandomPolicy::do_act(const Context&, Rng& rng) const {
  return rng.uniform_int(k_);
}

FixedActionPolicy::FixedActionPolicy(int context_dim, int k, ActionId action)
    : dim_(context_dim), k_(k), action_(action) {
  check_action(action, k);
}

std::optional<ActionDistribution> FixedActionPolicy::exact_distribution(const Context&) const {
  return ActionDistribution::one_hot(k_, action_);
}

LinearSoftmaxPolicy::LinearSoftmaxPolicy(Matrix weights, Vector bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  check_dim(bias_, static_cast<int>(weights_.rows()), "softmax bias");
}

std::optional<ActionDistribution> LinearSoftmaxPolicy::exact_distribution(
    const Context& context) const {
  return ActionDistribution(softmax(weights_ * context + bias_));
}

ActionId LinearSoftmaxPolicy::do_act(const Context& context, Rng& rng) const {
  const Vector p = softmax(weights_ * context + bias_);
  return rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

int default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> threads;
  threads.reserve(count - 1);
  for (std::size_t t = 1; t < count; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tsil
