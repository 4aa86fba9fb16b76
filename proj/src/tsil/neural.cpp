#include "tsil/neural.hpp"

#include <cmath>

namespace tsil {

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw DimensionError("network dimensions must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw DimensionError("hidden widths must be >= 1");
  }
}

MlpParams MlpParams::zeros_like(const MlpParams& other) {
  MlpParams z;
  z.layers.reserve(other.layers.size());
  for (const auto& l : other.layers) {
    z.layers.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()),
                        Vector::Zero(l.bias.size())});
  }
  return z;
}

Eigen::Index MlpParams::size() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

Vector MlpParams::flatten() const {
  Vector flat(size());
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    flat.segment(at, l.weights.size()) = l.weights.reshaped();
    at += l.weights.size();
    flat.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return flat;
}

void MlpParams::assign(const Vector& flat) {
  check_dim(flat, static_cast<int>(size()), "flat parameters");
  Eigen::Index at = 0;
  for (auto& l : layers) {
    l.weights.reshaped() = flat.segment(at, l.weights.size());
    at += l.weights.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weights.squaredNorm() + l.bias.squaredNorm();
  return s;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
  if (other.layers.size() != layers.size()) throw DimensionError("parameter layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights += other.layers[i].weights;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

MlpParams& MlpParams::operator*=(double scale) {
  for (auto& l : layers) {
    l.weights *= scale;
    l.bias *= scale;
  }
  return *this;
}

Mlp::Mlp(MlpSpec spec, MlpParams params) : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  check_shapes();
}

void Mlp::check_shapes() const {
  if (params_.layers.size() != spec_.hidden.size() + 1) {
    throw DimensionError("parameter layer count does not match network spec");
  }
  int in = spec_.input_dim;
  for (std::size_t i = 0; i < params_.layers.size(); ++i) {
    const int out = i < spec_.hidden.size() ? spec_.hidden[i] : spec_.output_dim;
    const auto& l = params_.layers[i];
    if (l.weights.rows() != out || l.weights.cols() != in || l.bias.size() != out) {
      throw DimensionError("layer " + std::to_string(i) + " has the wrong shape");
    }
    in = out;
  }
}

Mlp Mlp::zeros(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  int in = spec.input_dim;
  for (std::size_t i = 0; i <= spec.hidden.size(); ++i) {
    const int out = i < spec.hidden.size() ? spec.hidden[i] : spec.output_dim;
    p.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
    in = out;
  }
  return Mlp(spec, std::move(p));
}

Mlp Mlp::initialize(const MlpSpec& spec, Rng& rng) {
  Mlp net = zeros(spec);
  for (auto& l : net.params_.layers) {
    const double fan_in = static_cast<double>(l.weights.cols());
    const double fan_out = static_cast<double>(l.weights.rows());
    if (spec.activation == Activation::tanh) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) {
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
          l.weights(i, j) = limit * (2.0 * rng.uniform() - 1.0);
        }
      }
    } else {
      const double scale = std::sqrt(2.0 / fan_in);
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) {
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
          l.weights(i, j) = scale * rng.normal();
        }
      }
    }
  }
  return net;
}

int Mlp::feature_dim() const {
  return spec_.hidden.empty() ? spec_.input_dim : spec_.hidden.back();
}

namespace {

// tanh(x) = 1 - 2 / (exp(2x) + 1) through the vectorized exp.
template <class Derived>
void tanh_inplace(Eigen::MatrixBase<Derived>& m) {
  m = (1.0 - 2.0 / ((2.0 * m.array()).exp() + 1.0)).matrix();
}

void activate(Matrix& m, Activation a) {
  if (a == Activation::relu) {
    m = m.cwiseMax(0.0);
  } else {
    tanh_inplace(m);
  }
}

Matrix apply_head(const Matrix& logits, OutputHead head) {
  if (head == OutputHead::linear) return logits;
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) out.col(j) = softmax(logits.col(j));
  return out;
}

}  // namespace

Mlp::Pass Mlp::run(const Matrix& inputs) const {
  if (inputs.rows() != spec_.input_dim) {
    throw DimensionError("network input has " + std::to_string(inputs.rows()) +
                         " features, expected " + std::to_string(spec_.input_dim));
  }
  Pass t;
  t.inputs.reserve(params_.layers.size());
  Matrix h = inputs;
  for (std::size_t i = 0; i < params_.layers.size(); ++i) {
    const auto& l = params_.layers[i];
    Matrix z = l.weights * h;
    z.colwise() += l.bias;
    t.inputs.push_back(std::move(h));
    if (i + 1 < params_.layers.size()) {
      activate(z, spec_.activation);
      h = std::move(z);
    } else {
      t.logits = std::move(z);
    }
  }
  return t;
}

Vector Mlp::logits(const Vector& input) const {
  Vector out;
  logits_into(input, out);
  return out;
}

void Mlp::logits_into(const Vector& input, Vector& out) const {
  check_dim(input, spec_.input_dim, "network input");
  thread_local Vector a, b;
  const Vector* h = &input;
  const auto n = params_.layers.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto& l = params_.layers[i];
    Vector& z = (i % 2 == 0) ? a : b;
    z = l.bias;
    z.noalias() += l.weights * *h;
    if (spec_.activation == Activation::relu) {
      z = z.cwiseMax(0.0);
    } else {
      tanh_inplace(z);
    }
    h = &z;
  }
  out = params_.layers.back().bias;
  out.noalias() += params_.layers.back().weights * *h;
}

Vector Mlp::forward(const Vector& input) const {
  Vector z = logits(input);
  return spec_.head == OutputHead::softmax ? softmax(z) : z;
}

Vector Mlp::features(const Vector& input) const {
  return features_batch(input);
}

Matrix Mlp::logits_batch(const Matrix& inputs) const { return run(inputs).logits; }

Matrix Mlp::forward_batch(const Matrix& inputs) const {
  return apply_head(logits_batch(inputs), spec_.head);
}

Matrix Mlp::features_batch(const Matrix& inputs) const {
  return std::move(run(inputs).inputs.back());
}

MlpParams Mlp::backward(const Vector& input, const Vector& output_cotangent) const {
  check_dim(input, spec_.input_dim, "network input");
  check_dim(output_cotangent, spec_.output_dim, "output cotangent");
  Vector dlogits = output_cotangent;
  if (spec_.head == OutputHead::softmax) {
    const Vector p = forward(input);
    dlogits = p.cwiseProduct(output_cotangent.array().matrix() -
                             Vector::Constant(p.size(), p.dot(output_cotangent)));
  }
  return backward_logits(input, dlogits);
}

MlpParams Mlp::backward_logits(const Matrix& inputs, const Matrix& logit_cotangents) const {
  if (logit_cotangents.rows() != spec_.output_dim || logit_cotangents.cols() != inputs.cols()) {
    throw DimensionError("logit cotangent shape does not match the batch");
  }
  return backward_pass(run(inputs), logit_cotangents);
}

MlpParams Mlp::backward_pass(const Pass& t, const Matrix& logit_cotangents) const {
  if (logit_cotangents.rows() != spec_.output_dim ||
      logit_cotangents.cols() != t.logits.cols()) {
    throw DimensionError("logit cotangent shape does not match the batch");
  }
  MlpParams grad = MlpParams::zeros_like(params_);
  Matrix delta = logit_cotangents;
  for (std::size_t i = params_.layers.size(); i-- > 0;) {
    const Matrix& a = t.inputs[i];
    grad.layers[i].weights.noalias() = delta * a.transpose();
    grad.layers[i].bias = delta.rowwise().sum();
    if (i == 0) break;
    Matrix back = params_.layers[i].weights.transpose() * delta;
    // a is the activation output of layer i-1
    if (spec_.activation == Activation::relu) {
      delta = back.array() * (a.array() > 0.0).cast<double>();
    } else {
      delta = back.array() * (1.0 - a.array().square());
    }
  }
  return grad;
}

double LrSchedule::at(long step) const {
  const long events = decay_every > 0 ? step / decay_every : 0;
  return initial_lr / (1.0 + decay_rate * static_cast<double>(events));
}

void LrSchedule::validate() const {
  if (!(initial_lr > 0.0) || decay_rate < 0.0 || decay_every < 1) {
    throw ConfigError("learning-rate schedule needs lr > 0, decay_rate >= 0, decay_every >= 1");
  }
}

RmspropState::RmspropState(const MlpParams& shape, LrSchedule s, double rho_, double eps_)
    : accumulators(MlpParams::zeros_like(shape)), schedule(s), eps(eps_), rho(rho_) {
  schedule.validate();
}

void rmsprop_step(RmspropState& state, MlpParams& params, const MlpParams& grad) {
  if (grad.layers.size() != params.layers.size() ||
      state.accumulators.layers.size() != params.layers.size()) {
    throw DimensionError("optimizer state does not match parameters");
  }
  const double lr = state.current_lr();
  const double rho = state.rho;
  const double eps = state.eps;
  auto update = [&](auto& param, auto& acc, const auto& g) {
    acc.array() = rho * acc.array() + (1.0 - rho) * g.array().square();
    param.array() -= lr * g.array() / (acc.array().sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weights, state.accumulators.layers[i].weights, grad.layers[i].weights);
    update(params.layers[i].bias, state.accumulators.layers[i].bias, grad.layers[i].bias);
  }
  ++state.step_count;
}

double train_reward_net(Mlp& net, RmspropState& optimizer,
                        std::span<const InteractionRecord> records,
                        const RewardTrainingConfig& config, Rng& rng,
                        std::span<const double> weights) {
  if (records.empty()) throw DimensionError("reward net training needs at least one record");
  if (!weights.empty() && weights.size() != records.size()) {
    throw DimensionError("one weight per record required");
  }
  optimizer.reset_schedule();
  const int n = static_cast<int>(records.size());
  const int b = config.batch_size;
  Matrix x(net.input_dim(), b);
  double last_loss = 0.0;
  for (int step = 0; step < config.n_steps; ++step) {
    std::vector<int> idx(static_cast<std::size_t>(b));
    for (int j = 0; j < b; ++j) {
      idx[static_cast<std::size_t>(j)] = rng.uniform_int(n);
      x.col(j) = records[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])].context;
    }
    const Mlp::Pass pass = net.run(x);
    const Matrix& out = pass.logits;
    Matrix cot = Matrix::Zero(net.output_dim(), b);
    double loss = 0.0;
    for (int j = 0; j < b; ++j) {
      const auto& r = records[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      const double err = out(r.action, j) - r.reward;
      loss += w * err * err;
      cot(r.action, j) = 2.0 * w * err / b;
    }
    last_loss = loss / b;
    rmsprop_step(optimizer, net.mutable_params(), net.backward_pass(pass, cot));
  }
  return last_loss;
}

double reward_mse(const Mlp& net, std::span<const InteractionRecord> records) {
  if (records.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : records) {
    const double err = net.logits(r.context)[r.action] - r.reward;
    s += err * err;
  }
  return s / static_cast<double>(records.size());
}

}  // namespace tsil
