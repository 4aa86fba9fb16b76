#pragma once

#include <span>
#include <vector>

#include "tsil/core.hpp"

namespace tsil {

enum class Activation { relu, tanh };
enum class OutputHead { linear, softmax };

struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden;
  Activation activation = Activation::relu;
  int output_dim = 1;
  OutputHead head = OutputHead::linear;

  void validate() const;
};

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

/// Per-layer weights and biases; also the shape of gradients and optimizer accumulators.
struct MlpParams {
  std::vector<DenseLayer> layers;

  static MlpParams zeros_like(const MlpParams& other);

  Eigen::Index size() const;
  Vector flatten() const;
  void assign(const Vector& flat);
  double squared_norm() const;
  bool all_finite() const;

  MlpParams& operator+=(const MlpParams& other);
  MlpParams& operator*=(double scale);
};

/// Dense feed-forward network with hand-written reverse mode.
class Mlp {
 public:
  Mlp(MlpSpec spec, MlpParams params);

  /// Glorot-uniform weights for tanh nets, He-normal for relu nets, zero biases.
  static Mlp initialize(const MlpSpec& spec, Rng& rng);
  static Mlp zeros(const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  const MlpParams& params() const { return params_; }
  MlpParams& mutable_params() { return params_; }
  int input_dim() const { return spec_.input_dim; }
  int output_dim() const { return spec_.output_dim; }
  /// Width of the last hidden layer (input_dim if there is none).
  int feature_dim() const;

  /// Output after the head (probabilities for softmax heads).
  Vector forward(const Vector& input) const;
  /// Output before the head.
  Vector logits(const Vector& input) const;
  /// Same as logits() without allocating once `out` has the right size.
  void logits_into(const Vector& input, Vector& out) const;
  /// Last hidden layer activations.
  Vector features(const Vector& input) const;

  /// Columns are examples.
  Matrix forward_batch(const Matrix& inputs) const;
  Matrix logits_batch(const Matrix& inputs) const;
  Matrix features_batch(const Matrix& inputs) const;

  /// Gradient of <cotangent, forward(input)> with respect to all parameters.
  MlpParams backward(const Vector& input, const Vector& output_cotangent) const;
  /// Gradient of sum_j <cotangents_j, logits(inputs_j)>, summed over batch columns.
  MlpParams backward_logits(const Matrix& inputs, const Matrix& logit_cotangents) const;

  /// Batch forward pass that keeps the layer inputs for a later backward pass.
  struct Pass {
    std::vector<Matrix> inputs;  // input to each layer
    Matrix logits;
  };
  Pass run(const Matrix& inputs) const;
  MlpParams backward_pass(const Pass& pass, const Matrix& logit_cotangents) const;

 private:
  void check_shapes() const;

  MlpSpec spec_;
  MlpParams params_;
};

/// Inverse-time decay lr0 / (1 + rate * floor(step / decay_every)).
struct LrSchedule {
  double initial_lr = 0.01;
  double decay_rate = 0.0;
  long decay_every = 1;

  double at(long step) const;
  void validate() const;
};

struct RmspropState {
  MlpParams accumulators;
  LrSchedule schedule;
  long step_count = 0;
  double eps = 1e-8;
  double rho = 0.9;

  RmspropState() = default;
  RmspropState(const MlpParams& shape, LrSchedule schedule, double rho = 0.9, double eps = 1e-8);

  double current_lr() const { return schedule.at(step_count); }
  /// Restarts the learning-rate schedule; accumulators are kept.
  void reset_schedule() { step_count = 0; }
};

/// acc <- rho acc + (1 - rho) g^2; param <- param - lr(t) g / (sqrt(acc) + eps).
void rmsprop_step(RmspropState& state, MlpParams& params, const MlpParams& grad);

struct RewardTrainingConfig {
  int n_steps = 100;
  int batch_size = 64;
};

/// Masked-MSE training of a multi-output reward net: only the taken action's output
/// enters the loss. Minibatches are drawn uniformly with replacement; `weights` (optional,
/// one per record) scale each example's loss. Resets the learning-rate schedule first.
/// Returns the mean loss of the final minibatch.
double train_reward_net(Mlp& net, RmspropState& optimizer,
                        std::span<const InteractionRecord> records,
                        const RewardTrainingConfig& config, Rng& rng,
                        std::span<const double> weights = {});

/// Mean squared error of the taken-action outputs.
double reward_mse(const Mlp& net, std::span<const InteractionRecord> records);

}  // namespace tsil
