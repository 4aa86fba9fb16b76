#include "tsil/divergences.hpp"

#include <cmath>
#include <limits>

namespace tsil {

namespace {

void same_support(const ActionDistribution& p, const ActionDistribution& q) {
  if (p.size() != q.size()) throw DimensionError("distributions over different action counts");
}

}  // namespace

double kl_discrete(const ActionDistribution& p, const ActionDistribution& q) {
  same_support(p, q);
  double kl = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    if (p[a] == 0.0) continue;
    if (q[a] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p[a] * std::log(p[a] / q[a]);
  }
  return std::max(kl, 0.0);
}

double tv_discrete(const ActionDistribution& p, const ActionDistribution& q) {
  same_support(p, q);
  return 0.5 * (p.probs() - q.probs()).cwiseAbs().sum();
}

double cross_entropy(const ActionDistribution& p, const ActionDistribution& q) {
  same_support(p, q);
  double h = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    if (p[a] == 0.0) continue;
    if (q[a] == 0.0) return std::numeric_limits<double>::infinity();
    h -= p[a] * std::log(q[a]);
  }
  return h;
}

double entropy(const ActionDistribution& p) {
  double h = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    if (p[a] > 0.0) h -= p[a] * std::log(p[a]);
  }
  return h;
}

ActionDistribution laplace_smooth(const ActionDistribution& p, double eps) {
  Vector s = (p.probs().array() + eps) / (1.0 + eps * p.size());
  return ActionDistribution(s / s.sum());
}

bool pinsker_holds(double tv, double kl) {
  if (!std::isfinite(kl)) return true;
  return tv <= std::sqrt(kl / 2.0) + 1e-12;
}

DivergenceReport compare_distributions(const ActionDistribution& p, const ActionDistribution& q,
                                       const ActionMetric* metric) {
  DivergenceReport r;
  r.kl = kl_discrete(p, q);
  r.tv = tv_discrete(p, q);
  r.pinsker_ok = pinsker_holds(r.tv, r.kl);
  if (metric) r.w1 = solve_kantorovich_dual(p, q, *metric).value;
  return r;
}

}  // namespace tsil
