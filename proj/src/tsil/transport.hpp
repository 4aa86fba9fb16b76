#pragma once

#include "tsil/core.hpp"

namespace tsil {

/// Ground metric on the action set: zero diagonal, symmetric, triangle inequality.
/// Off-diagonal zeros are allowed (pseudometric).
class ActionMetric {
 public:
  explicit ActionMetric(Matrix distances);

  /// d(i, j) = |i - j| for ordered actions.
  static ActionMetric line(int k);
  /// d(i, j) = 1 for i != j; W1 under it equals total variation.
  static ActionMetric discrete(int k);
  static ActionMetric zero(int k);

  int size() const { return static_cast<int>(d_.rows()); }
  double operator()(int i, int j) const { return d_(i, j); }
  const Matrix& matrix() const { return d_; }
  double max_distance() const { return d_.maxCoeff(); }

 private:
  Matrix d_;
};

/// Optimal transport between two action distributions under an ActionMetric.
struct KantorovichSolution {
  double value = 0.0;         // W1(p, q), the optimal primal cost
  double primal_cost = 0.0;   // sum_ij plan_ij d(i, j)
  Vector potential;           // g, 1-Lipschitz; g.p - g.q equals value up to rounding
  Matrix plan;                // coupling with marginals p (rows) and q (columns)
  int pivots = 0;
};

/// Solves the transport LP with the transportation (primal network) simplex, reads the
/// row/column duals off the optimal basis, and turns them into a single 1-Lipschitz
/// potential by a c-transform. Equal inputs get the zero potential. Throws NumericalError
/// if the simplex fails to converge.
KantorovichSolution solve_kantorovich_dual(const ActionDistribution& p,
                                           const ActionDistribution& q,
                                           const ActionMetric& metric);

/// Largest violation of g(a) - g(b) <= d(a, b) over all ordered pairs (<= 0 if feasible).
double lipschitz_violation(const Vector& potential, const ActionMetric& metric);

}  // namespace tsil
