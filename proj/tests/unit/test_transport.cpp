#include <gtest/gtest.h>

#include <cmath>

#include "oracles/lp_oracle.hpp"
#include "tsil/transport.hpp"

using namespace tsil;

namespace {

ActionDistribution random_distribution(int k, Rng& rng, bool sparse = false) {
  Vector v(k);
  for (int i = 0; i < k; ++i) v[i] = (sparse && rng.uniform() < 0.4) ? 0.0 : rng.gamma(1.0);
  if (v.sum() == 0.0) v[0] = 1.0;
  return ActionDistribution(v / v.sum());
}

// Shortest-path closure of random symmetric weights is a metric.
ActionMetric random_metric(int k, Rng& rng) {
  Matrix d(k, k);
  for (int i = 0; i < k; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < k; ++j) d(i, j) = d(j, i) = 0.1 + 2.0 * rng.uniform();
  }
  for (int m = 0; m < k; ++m) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) d(i, j) = std::min(d(i, j), d(i, m) + d(m, j));
    }
  }
  return ActionMetric(d);
}

}  // namespace

TEST(ActionMetric, Validation) {
  Matrix bad = Matrix::Zero(3, 3);
  bad(0, 1) = bad(1, 0) = 1.0;
  bad(1, 2) = bad(2, 1) = 1.0;
  bad(0, 2) = bad(2, 0) = 3.0;  // violates the triangle inequality
  EXPECT_THROW(ActionMetric{bad}, NumericalError);
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  EXPECT_THROW(ActionMetric{asym}, NumericalError);
  EXPECT_NO_THROW(ActionMetric::line(5));
  EXPECT_EQ(ActionMetric::line(5)(1, 4), 3.0);
  EXPECT_EQ(ActionMetric::discrete(3)(0, 2), 1.0);
}

TEST(Kantorovich, EqualDistributionsHaveZeroDistance) {
  Rng rng(1);
  const auto p = random_distribution(6, rng);
  EXPECT_NEAR(solve_kantorovich_dual(p, p, ActionMetric::line(6)).value, 0.0, 1e-12);
}

TEST(Kantorovich, PointMassesGiveGroundDistanceExactly) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 7;
    const auto metric = random_metric(k, rng);
    const int a = rng.uniform_int(k), b = rng.uniform_int(k);
    const auto sol = solve_kantorovich_dual(ActionDistribution::one_hot(k, a),
                                            ActionDistribution::one_hot(k, b), metric);
    EXPECT_EQ(sol.value, metric(a, b));
    EXPECT_EQ(sol.primal_cost, metric(a, b));
  }
}

TEST(Kantorovich, MatchesDenseSimplexOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 5;
    const auto p = random_distribution(k, rng, trial % 3 == 0);
    const auto q = random_distribution(k, rng, trial % 4 == 0);
    const auto metric = random_metric(k, rng);
    const auto sol = solve_kantorovich_dual(p, q, metric);
    const auto ref = oracle::transport_lp(p.probs(), q.probs(), metric.matrix());
    EXPECT_NEAR(sol.primal_cost, ref.cost, 1e-6);
    EXPECT_NEAR(sol.value, ref.cost, 1e-6);
  }
}

TEST(Kantorovich, StrongDualityAndFeasibility) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 7;
    const auto p = random_distribution(k, rng, trial % 2 == 0);
    const auto q = random_distribution(k, rng);
    const auto metric = trial % 3 == 0 ? ActionMetric::line(k) : random_metric(k, rng);
    const auto sol = solve_kantorovich_dual(p, q, metric);
    EXPECT_NEAR(sol.primal_cost, sol.value, 1e-8);
    EXPECT_NEAR(sol.value, sol.potential.dot(p.probs() - q.probs()), 1e-8);
    EXPECT_LE(lipschitz_violation(sol.potential, metric), 1e-9);
    EXPECT_LT((sol.plan.rowwise().sum() - p.probs()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((sol.plan.colwise().sum().transpose() - q.probs()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(sol.plan.minCoeff(), -1e-15);
  }
}

TEST(Kantorovich, DiscreteMetricGivesTotalVariation) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 8;
    const auto p = random_distribution(k, rng);
    const auto q = random_distribution(k, rng);
    const double tv = 0.5 * (p.probs() - q.probs()).cwiseAbs().sum();
    EXPECT_NEAR(solve_kantorovich_dual(p, q, ActionMetric::discrete(k)).value, tv, 1e-12);
  }
}

TEST(Kantorovich, LineMetricEqualsCdfDistance) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 10;
    const auto p = random_distribution(k, rng);
    const auto q = random_distribution(k, rng);
    double cdf = 0.0, expected = 0.0;
    for (int i = 0; i + 1 < k; ++i) {
      cdf += p[i] - q[i];
      expected += std::abs(cdf);
    }
    EXPECT_NEAR(solve_kantorovich_dual(p, q, ActionMetric::line(k)).value, expected, 1e-12);
  }
}

TEST(Kantorovich, HandlesLargeK) {
  Rng rng(7);
  const int k = 256;
  const auto p = random_distribution(k, rng);
  const auto q = random_distribution(k, rng);
  const auto sol = solve_kantorovich_dual(p, q, ActionMetric::line(k));
  EXPECT_NEAR(sol.primal_cost, sol.value, 1e-8);
  EXPECT_LE(lipschitz_violation(sol.potential, ActionMetric::line(k)), 1e-9);
}

TEST(Kantorovich, ZeroMetricGivesZero) {
  Rng rng(8);
  const auto sol = solve_kantorovich_dual(random_distribution(4, rng), random_distribution(4, rng),
                                          ActionMetric::zero(4));
  EXPECT_EQ(sol.value, 0.0);
  EXPECT_EQ(sol.potential, Vector::Zero(4));
}

TEST(Kantorovich, SizeMismatchThrows) {
  EXPECT_THROW(solve_kantorovich_dual(ActionDistribution::uniform(3), ActionDistribution::uniform(3),
                                      ActionMetric::line(4)),
               DimensionError);
}
