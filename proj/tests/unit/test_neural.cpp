#include <gtest/gtest.h>

#include <cmath>

#include "oracles/finite_diff.hpp"
#include "tsil/neural.hpp"

using namespace tsil;

namespace {

// Plain loops, no Eigen expressions beyond element access.
Vector reference_forward(const MlpSpec& spec, const MlpParams& params, const Vector& x) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    std::vector<double> z(static_cast<std::size_t>(layer.weights.rows()));
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      double acc = layer.bias[i];
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        acc += layer.weights(i, j) * h[static_cast<std::size_t>(j)];
      }
      const bool hidden = l + 1 < params.layers.size();
      if (hidden) acc = spec.activation == Activation::relu ? std::max(acc, 0.0) : std::tanh(acc);
      z[static_cast<std::size_t>(i)] = acc;
    }
    h = std::move(z);
  }
  if (spec.head == OutputHead::softmax) {
    double m = h[0];
    for (double v : h) m = std::max(m, v);
    double s = 0.0;
    for (double& v : h) s += (v = std::exp(v - m));
    for (double& v : h) v /= s;
  }
  return Eigen::Map<Vector>(h.data(), static_cast<Eigen::Index>(h.size()));
}

Vector random_vector(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

void expect_gradient_matches(const Mlp& net, const Vector& x, const Vector& cot) {
  const Vector analytic = net.backward(x, cot).flatten();
  Mlp probe = net;
  const auto f = [&](const Vector& flat) {
    probe.mutable_params().assign(flat);
    return cot.dot(probe.forward(x));
  };
  const Vector numeric = oracle::central_difference(f, net.params().flatten(), 1e-5);
  ASSERT_EQ(analytic.size(), numeric.size());
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    EXPECT_LE(std::abs(analytic[i] - numeric[i]), std::max(1e-4, 1e-3 * std::abs(numeric[i])))
        << "parameter " << i;
  }
}

}  // namespace

TEST(MlpForward, ZeroWeightsSoftmaxIsUniform) {
  const Mlp net = Mlp::zeros({3, {4}, Activation::tanh, 5, OutputHead::softmax});
  const Vector p = net.forward(Vector::Ones(3));
  EXPECT_TRUE(p.isApprox(Vector::Constant(5, 0.2), 1e-15));
}

TEST(MlpForward, IdentityLinearLayer) {
  MlpParams params;
  params.layers.push_back({Matrix::Identity(3, 3), Vector::Zero(3)});
  const Mlp net({3, {}, Activation::relu, 3, OutputHead::linear}, params);
  Vector x(3);
  x << -1.0, 2.0, 0.5;
  EXPECT_EQ(net.forward(x), x);
}

TEST(MlpForward, MatchesLayerByLayerOracle) {
  Rng rng(3);
  for (Activation act : {Activation::relu, Activation::tanh}) {
    for (OutputHead head : {OutputHead::linear, OutputHead::softmax}) {
      const MlpSpec spec{5, {7, 6}, act, 4, head};
      const Mlp net = Mlp::initialize(spec, rng);
      for (int t = 0; t < 10; ++t) {
        const Vector x = random_vector(5, rng);
        EXPECT_LT((net.forward(x) - reference_forward(spec, net.params(), x)).cwiseAbs().maxCoeff(),
                  1e-10);
      }
      Matrix batch(5, 3);
      for (int j = 0; j < 3; ++j) batch.col(j) = random_vector(5, rng);
      const Matrix out = net.forward_batch(batch);
      for (int j = 0; j < 3; ++j) {
        EXPECT_LT((out.col(j) - net.forward(batch.col(j))).norm(), 1e-12);
      }
    }
  }
}

TEST(MlpForward, DimensionErrors) {
  const Mlp net = Mlp::zeros({3, {4}, Activation::tanh, 2, OutputHead::linear});
  EXPECT_THROW(net.forward(Vector::Ones(2)), DimensionError);
  EXPECT_THROW(Mlp({3, {4}, Activation::tanh, 2, OutputHead::linear}, MlpParams{}), DimensionError);
}

TEST(MlpForward, SoftmaxOutputsPositiveAndNormalized) {
  Rng rng(1);
  const Mlp net = Mlp::initialize({4, {8, 8}, Activation::tanh, 6, OutputHead::softmax}, rng);
  for (int t = 0; t < 100; ++t) {
    const Vector p = net.forward(10.0 * random_vector(4, rng));
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_GT(p.minCoeff(), 0.0);
  }
}

TEST(MlpBackward, ZeroCotangentGivesZeroGradient) {
  Rng rng(2);
  const Mlp net = Mlp::initialize({3, {4}, Activation::relu, 2, OutputHead::linear}, rng);
  EXPECT_EQ(net.backward(Vector::Ones(3), Vector::Zero(2)).squared_norm(), 0.0);
}

TEST(MlpBackward, FiniteDifferencesSmallNets) {
  for (Activation act : {Activation::relu, Activation::tanh}) {
    for (OutputHead head : {OutputHead::linear, OutputHead::softmax}) {
      Rng rng(40 + static_cast<int>(act) * 2 + static_cast<int>(head));
      const Mlp net = Mlp::initialize({3, {4}, act, 2, head}, rng);
      expect_gradient_matches(net, random_vector(3, rng), random_vector(2, rng));
    }
  }
}

TEST(MlpBackward, BatchGradientIsSumOfExamples) {
  Rng rng(8);
  const Mlp net = Mlp::initialize({3, {5, 4}, Activation::tanh, 3, OutputHead::linear}, rng);
  Matrix x(3, 4), c(3, 4);
  for (int j = 0; j < 4; ++j) {
    x.col(j) = random_vector(3, rng);
    c.col(j) = random_vector(3, rng);
  }
  MlpParams sum = MlpParams::zeros_like(net.params());
  for (int j = 0; j < 4; ++j) sum += net.backward(x.col(j), c.col(j));
  EXPECT_LT((net.backward_logits(x, c).flatten() - sum.flatten()).norm(), 1e-12);
  const auto pass = net.run(x);
  EXPECT_LT((net.backward_pass(pass, c).flatten() - sum.flatten()).norm(), 1e-12);
}

TEST(MlpParams, FlattenAssignRoundTrip) {
  Rng rng(4);
  Mlp net = Mlp::initialize({2, {3}, Activation::relu, 2, OutputHead::linear}, rng);
  const Vector flat = net.params().flatten();
  EXPECT_EQ(flat.size(), 2 * 3 + 3 + 3 * 2 + 2);
  net.mutable_params().assign(2.0 * flat);
  EXPECT_EQ(net.params().flatten(), 2.0 * flat);
}

TEST(Rmsprop, HandEvaluatedFirstStep) {
  MlpParams p;
  p.layers.push_back({Matrix::Zero(1, 1), Vector::Zero(1)});
  MlpParams g = p;
  g.layers[0].weights(0, 0) = 1.0;
  RmspropState state(p, {0.01, 0.0, 1}, 0.9, 1e-8);
  rmsprop_step(state, p, g);
  EXPECT_NEAR(p.layers[0].weights(0, 0), -0.01 / (std::sqrt(0.1) + 1e-8), 1e-15);
  EXPECT_NEAR(p.layers[0].weights(0, 0), -0.031623, 1e-6);
  EXPECT_EQ(p.layers[0].bias[0], 0.0);
  EXPECT_EQ(state.step_count, 1);
}

TEST(Rmsprop, ZeroGradientDecaysAccumulators) {
  MlpParams p;
  p.layers.push_back({Matrix::Constant(2, 2, 0.5), Vector::Ones(2)});
  RmspropState state(p, {0.01, 0.0, 1});
  state.accumulators.layers[0].weights.setConstant(1.0);
  const MlpParams before = p;
  rmsprop_step(state, p, MlpParams::zeros_like(p));
  EXPECT_EQ(p.flatten(), before.flatten());
  EXPECT_NEAR(state.accumulators.layers[0].weights(0, 0), 0.9, 1e-15);
}

TEST(LrSchedule, InverseTimeDecay) {
  const LrSchedule reward{0.01, 0.55, 1};
  EXPECT_DOUBLE_EQ(reward.at(0), 0.01);
  EXPECT_NEAR(reward.at(1), 0.01 / 1.55, 1e-15);
  EXPECT_NEAR(reward.at(1), 0.006452, 1e-6);
  const LrSchedule imitation{0.001, 0.05, 100};
  EXPECT_DOUBLE_EQ(imitation.at(99), 0.001);
  EXPECT_NEAR(imitation.at(100), 0.001 / 1.05, 1e-15);
  double prev = imitation.at(0);
  for (long t = 1; t < 5000; t += 7) {
    EXPECT_LE(imitation.at(t), prev);
    prev = imitation.at(t);
  }
  EXPECT_THROW((LrSchedule{0.0, 0.1, 1}.validate()), ConfigError);
}

TEST(TrainRewardNet, LearnsLinearlyRealizableData) {
  Rng rng(12);
  std::vector<InteractionRecord> train, test;
  const auto make = [&](std::vector<InteractionRecord>& out, int n) {
    for (int i = 0; i < n; ++i) {
      Vector s(2);
      s << rng.uniform(), rng.uniform();
      const int a = rng.uniform_int(2);
      const double r = a == 0 ? 1.0 + 2.0 * s[0] - s[1] : -0.5 + s[1];
      out.push_back({s, a, r, i + 1});
    }
  };
  make(train, 500);
  make(test, 500);
  Mlp net = Mlp::initialize({2, {100, 100}, Activation::relu, 2, OutputHead::linear}, rng);
  RmspropState opt(net.params(), {0.01, 0.55, 1});
  const double before = reward_mse(net, test);
  train_reward_net(net, opt, train, {}, rng);
  EXPECT_LT(reward_mse(net, test), 0.5 * before);
}

TEST(TrainRewardNet, MaskedLossLeavesUnobservedHeadsUntouched) {
  Rng rng(5);
  Mlp net = Mlp::initialize({2, {6}, Activation::relu, 3, OutputHead::linear}, rng);
  const auto out_before = net.params().layers.back();
  std::vector<InteractionRecord> records;
  for (int i = 0; i < 20; ++i) records.push_back({Vector::Constant(2, 0.1 * i), 1, 1.0, i + 1});
  RmspropState opt(net.params(), {0.01, 0.55, 1});
  train_reward_net(net, opt, records, {5, 8}, rng);
  const auto& out_after = net.params().layers.back();
  for (int row : {0, 2}) {
    EXPECT_EQ(out_after.weights.row(row), out_before.weights.row(row));
    EXPECT_EQ(out_after.bias[row], out_before.bias[row]);
  }
  EXPECT_NE(out_after.weights.row(1), out_before.weights.row(1));
}

TEST(TrainRewardNet, DeterministicGivenSeed) {
  std::vector<InteractionRecord> records;
  for (int i = 0; i < 30; ++i) records.push_back({Vector::Constant(2, 0.03 * i), i % 2, 0.1 * i, i + 1});
  const auto train = [&] {
    Rng rng(77);
    Mlp net = Mlp::initialize({2, {10, 10}, Activation::relu, 2, OutputHead::linear}, rng);
    RmspropState opt(net.params(), {0.01, 0.55, 1});
    train_reward_net(net, opt, records, {}, rng);
    return net.params().flatten();
  };
  EXPECT_EQ(train(), train());
}
