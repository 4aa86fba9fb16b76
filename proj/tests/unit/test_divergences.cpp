#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "tsil/divergences.hpp"
#include "tsil/transport.hpp"

using namespace tsil;

namespace {

ActionDistribution dist(std::initializer_list<double> v) {
  Vector p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return ActionDistribution(p);
}

ActionDistribution random_distribution(int k, Rng& rng) {
  Vector v(k);
  for (int i = 0; i < k; ++i) v[i] = rng.gamma(0.5) + (rng.uniform() < 0.1 ? 0.0 : 1e-3);
  return ActionDistribution(v / v.sum());
}

}  // namespace

TEST(Kl, KnownValues) {
  EXPECT_EQ(kl_discrete(dist({0.3, 0.7}), dist({0.3, 0.7})), 0.0);
  EXPECT_NEAR(kl_discrete(dist({0.5, 0.5}), dist({0.9, 0.1})),
              0.5 * std::log(5.0 / 9.0) + 0.5 * std::log(5.0), 1e-15);
  EXPECT_NEAR(kl_discrete(dist({0.5, 0.5}), dist({0.9, 0.1})), 0.510826, 1e-6);
  EXPECT_NEAR(kl_discrete(dist({1.0, 0.0}), dist({0.5, 0.5})), std::log(2.0), 1e-15);
}

TEST(Kl, InfiniteOnSupportMismatch) {
  EXPECT_EQ(kl_discrete(dist({0.5, 0.5}), dist({1.0, 0.0})), std::numeric_limits<double>::infinity());
}

TEST(Kl, NonNegativeAndZeroOnlyAtEquality) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const auto p = random_distribution(2 + t % 10, rng);
    const auto q = random_distribution(2 + t % 10, rng);
    EXPECT_GE(kl_discrete(p, q), 0.0);
    EXPECT_LE(kl_discrete(p, p), 1e-12);
  }
}

TEST(Kl, CrossEntropyMinusEntropyIdentity) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const auto p = random_distribution(5, rng);
    const auto q = laplace_smooth(random_distribution(5, rng));
    EXPECT_NEAR(cross_entropy(p, q) - entropy(p), kl_discrete(p, q), 1e-9);
  }
}

TEST(Tv, KnownValues) {
  EXPECT_EQ(tv_discrete(dist({0.2, 0.8}), dist({0.2, 0.8})), 0.0);
  EXPECT_EQ(tv_discrete(dist({1.0, 0.0}), dist({0.0, 1.0})), 1.0);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_distribution(7, rng);
    const auto q = random_distribution(7, rng);
    double l1 = 0.0;
    for (int a = 0; a < 7; ++a) l1 += std::abs(p[a] - q[a]);
    EXPECT_NEAR(tv_discrete(p, q), 0.5 * l1, 1e-12);
  }
}

TEST(Pinsker, HoldsOnRandomPairs) {
  Rng rng(4);
  int violations = 0;
  for (int t = 0; t < 20000; ++t) {
    const int k = 2 + rng.uniform_int(19);
    const auto p = random_distribution(k, rng);
    const auto q = random_distribution(k, rng);
    const double kl = kl_discrete(p, q);
    if (std::isfinite(kl) && !pinsker_holds(tv_discrete(p, q), kl)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Pinsker, ReportFlagsViolations) {
  EXPECT_FALSE(pinsker_holds(0.5, 0.1));
  EXPECT_TRUE(pinsker_holds(0.5, std::numeric_limits<double>::infinity()));
  const auto r = compare_distributions(dist({0.4, 0.6}), dist({0.6, 0.4}));
  EXPECT_TRUE(r.pinsker_ok);
  EXPECT_FALSE(r.w1.has_value());
}

TEST(Wasserstein, BoundedByDiameterTimesTwiceTv) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 8;
    const auto p = random_distribution(k, rng);
    const auto q = random_distribution(k, rng);
    const auto metric = ActionMetric::line(k);
    const auto r = compare_distributions(p, q, &metric);
    ASSERT_TRUE(r.w1.has_value());
    EXPECT_LE(*r.w1, metric.max_distance() * 2.0 * r.tv + 1e-12);
  }
}

TEST(LaplaceSmooth, KeepsDistributionValid) {
  const auto s = laplace_smooth(dist({1.0, 0.0, 0.0}));
  EXPECT_NEAR(s.probs().sum(), 1.0, 1e-15);
  EXPECT_GT(s[2], 0.0);
  EXPECT_TRUE(std::isfinite(kl_discrete(dist({0.2, 0.3, 0.5}), s)));
}
