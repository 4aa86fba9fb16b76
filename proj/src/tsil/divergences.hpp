#pragma once

#include <optional>

#include "tsil/core.hpp"
#include "tsil/transport.hpp"

namespace tsil {

/// KL(p || q) in nats; +infinity when q(a) = 0 < p(a).
double kl_discrete(const ActionDistribution& p, const ActionDistribution& q);

/// Total variation: half the L1 distance.
double tv_discrete(const ActionDistribution& p, const ActionDistribution& q);

/// Cross-entropy -sum p log q in nats.
double cross_entropy(const ActionDistribution& p, const ActionDistribution& q);
double entropy(const ActionDistribution& p);

/// (p + eps) / (1 + k eps); keeps KL diagnostics finite.
ActionDistribution laplace_smooth(const ActionDistribution& p, double eps = 1e-6);

/// TV <= sqrt(KL / 2); vacuously true for infinite KL.
bool pinsker_holds(double tv, double kl);

struct DivergenceReport {
  double kl = 0.0;
  double tv = 0.0;
  std::optional<double> w1;
  bool pinsker_ok = true;
};

DivergenceReport compare_distributions(const ActionDistribution& p, const ActionDistribution& q,
                                       const ActionMetric* metric = nullptr);

}  // namespace tsil
