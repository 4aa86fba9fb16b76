#include "tsil/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsil {

ActionMetric::ActionMetric(Matrix distances) : d_(std::move(distances)) {
  const auto k = d_.rows();
  if (k < 1 || d_.cols() != k) throw DimensionError("action metric must be square and non-empty");
  if (!d_.allFinite()) throw NumericalError("action metric has non-finite entries");
  const double tol = 1e-12 * (1.0 + d_.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (d_(i, i) != 0.0) throw NumericalError("action metric needs a zero diagonal");
    for (Eigen::Index j = 0; j < k; ++j) {
      if (d_(i, j) < 0.0) throw NumericalError("action metric must be non-negative");
      if (std::abs(d_(i, j) - d_(j, i)) > tol) throw NumericalError("action metric must be symmetric");
      for (Eigen::Index m = 0; m < k; ++m) {
        if (d_(i, j) > d_(i, m) + d_(m, j) + tol) {
          throw NumericalError("action metric violates the triangle inequality");
        }
      }
    }
  }
}

ActionMetric ActionMetric::line(int k) {
  Matrix d(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) d(i, j) = std::abs(i - j);
  }
  return ActionMetric(std::move(d));
}

ActionMetric ActionMetric::discrete(int k) {
  return ActionMetric(Matrix::Ones(k, k) - Matrix::Identity(k, k));
}

ActionMetric ActionMetric::zero(int k) { return ActionMetric(Matrix::Zero(k, k)); }

double lipschitz_violation(const Vector& g, const ActionMetric& metric) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < metric.size(); ++a) {
    for (int b = 0; b < metric.size(); ++b) {
      if (a != b) worst = std::max(worst, g[a] - g[b] - metric(a, b));
    }
  }
  return metric.size() > 1 ? worst : 0.0;
}

namespace {

struct BasicCell {
  int row;
  int col;
  double flow;
};

// Spanning-tree basis of the k x k transportation problem. Nodes 0..m-1 are rows
// (supplies), m..m+n-1 are columns (demands); each basic cell is a tree edge.
class TransportSimplex {
 public:
  TransportSimplex(const Vector& supply, const Vector& demand, const Matrix& cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        cost_(cost),
        adj_(static_cast<std::size_t>(m_ + n_)),
        basic_(Eigen::MatrixXi::Constant(m_, n_, -1)) {
    northwest_corner(supply, demand);
  }

  int solve() {
    const int max_pivots = 50 * (m_ + n_) * (m_ + n_) + 1000;
    const int bland_after = 5 * (m_ + n_) * (m_ + n_) + 100;
    const double tol = 1e-13 * (1.0 + cost_.cwiseAbs().maxCoeff());
    for (int pivots = 0; pivots < max_pivots; ++pivots) {
      compute_potentials();
      int ei = -1;
      int ej = -1;
      double best = -tol;
      for (int j = 0; j < n_ && !(pivots > bland_after && ei >= 0); ++j) {
        for (int i = 0; i < m_; ++i) {
          if (basic_(i, j) >= 0) continue;
          const double r = cost_(i, j) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            ei = i;
            ej = j;
            if (pivots > bland_after) break;
          }
        }
      }
      if (ei < 0) return pivots;
      pivot(ei, ej);
    }
    throw NumericalError("transport simplex did not converge");
  }

  Matrix plan() const {
    Matrix x = Matrix::Zero(m_, n_);
    for (const auto& c : cells_) x(c.row, c.col) = c.flow;
    return x;
  }

  const Vector& row_potentials() const { return u_; }
  const Vector& col_potentials() const { return v_; }

 private:
  void add_cell(int i, int j, double flow) {
    const int id = static_cast<int>(cells_.size());
    cells_.push_back({i, j, flow});
    adj_[static_cast<std::size_t>(i)].push_back(id);
    adj_[static_cast<std::size_t>(m_ + j)].push_back(id);
    basic_(i, j) = id;
  }

  void northwest_corner(const Vector& supply, const Vector& demand) {
    Vector s = supply;
    Vector t = demand;
    int i = 0;
    int j = 0;
    while (true) {
      if (i == m_ - 1 && j == n_ - 1) {
        add_cell(i, j, std::max(0.0, s[i]));
        break;
      }
      const double x = std::max(0.0, std::min(s[i], t[j]));
      add_cell(i, j, x);
      s[i] -= x;
      t[j] -= x;
      if (j == n_ - 1 || (i < m_ - 1 && s[i] <= t[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  int other_end(int cell, int node) const {
    const auto& c = cells_[static_cast<std::size_t>(cell)];
    return node < m_ ? m_ + c.col : c.row;
  }

  void compute_potentials() {
    u_ = Vector::Zero(m_);
    v_ = Vector::Zero(n_);
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int cell : adj_[static_cast<std::size_t>(node)]) {
        const int next = other_end(cell, node);
        if (seen[static_cast<std::size_t>(next)]) continue;
        seen[static_cast<std::size_t>(next)] = 1;
        const auto& c = cells_[static_cast<std::size_t>(cell)];
        if (next >= m_) {
          v_[c.col] = cost_(c.row, c.col) - u_[c.row];
        } else {
          u_[c.row] = cost_(c.row, c.col) - v_[c.col];
        }
        stack.push_back(next);
      }
    }
  }

  // Tree path from column node (m + j) to row node i, as a list of cell ids.
  std::vector<int> tree_path(int from, int to) const {
    std::vector<int> parent_cell(static_cast<std::size_t>(m_ + n_), -2);
    std::vector<int> stack{from};
    parent_cell[static_cast<std::size_t>(from)] = -1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node == to) break;
      for (int cell : adj_[static_cast<std::size_t>(node)]) {
        const int next = other_end(cell, node);
        if (parent_cell[static_cast<std::size_t>(next)] != -2) continue;
        parent_cell[static_cast<std::size_t>(next)] = cell;
        stack.push_back(next);
      }
    }
    if (parent_cell[static_cast<std::size_t>(to)] == -2) throw NumericalError("transport basis is not a spanning tree");
    std::vector<int> path;
    for (int node = to; node != from;) {
      const int cell = parent_cell[static_cast<std::size_t>(node)];
      path.push_back(cell);
      node = other_end(cell, node);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void pivot(int ei, int ej) {
    // Cycle: +(ei, ej), then alternating -, +, ... along the path column ej -> row ei.
    const std::vector<int> path = tree_path(m_ + ej, ei);
    int leaving = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < path.size(); s += 2) {
      const auto& c = cells_[static_cast<std::size_t>(path[s])];
      if (c.flow < theta) {
        theta = c.flow;
        leaving = path[s];
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t s = 0; s < path.size(); ++s) {
      auto& c = cells_[static_cast<std::size_t>(path[s])];
      c.flow += (s % 2 == 0) ? -theta : theta;
    }
    auto& out = cells_[static_cast<std::size_t>(leaving)];
    auto detach = [&](int node) {
      auto& list = adj_[static_cast<std::size_t>(node)];
      list.erase(std::find(list.begin(), list.end(), leaving));
    };
    detach(out.row);
    detach(m_ + out.col);
    basic_(out.row, out.col) = -1;
    out = {ei, ej, theta};
    adj_[static_cast<std::size_t>(ei)].push_back(leaving);
    adj_[static_cast<std::size_t>(m_ + ej)].push_back(leaving);
    basic_(ei, ej) = leaving;
  }

  int m_;
  int n_;
  const Matrix& cost_;
  std::vector<BasicCell> cells_;
  std::vector<std::vector<int>> adj_;
  Eigen::MatrixXi basic_;
  Vector u_;
  Vector v_;
};

}  // namespace

KantorovichSolution solve_kantorovich_dual(const ActionDistribution& p,
                                           const ActionDistribution& q,
                                           const ActionMetric& metric) {
  const int k = metric.size();
  if (p.size() != k || q.size() != k) throw DimensionError("distributions and metric disagree on k");

  KantorovichSolution sol;
  if (p.probs() == q.probs()) {
    sol.plan = p.probs().asDiagonal();
    sol.potential = Vector::Zero(k);
    return sol;
  }

  TransportSimplex simplex(p.probs(), q.probs(), metric.matrix());
  sol.pivots = simplex.solve();
  sol.plan = simplex.plan();
  sol.primal_cost = (sol.plan.array() * metric.matrix().array()).sum();

  // c-transform of the column duals: g(i) = min_j d(i, j) - v_j.
  const Vector& v = simplex.col_potentials();
  sol.potential.resize(k);
  for (int i = 0; i < k; ++i) {
    double g = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) g = std::min(g, metric(i, j) - v[j]);
    sol.potential[i] = g;
  }
  sol.potential.array() -= sol.potential[0];
  sol.value = sol.primal_cost;
  if (!std::isfinite(sol.potential.dot(p.probs() - q.probs()))) throw NumericalError("transport dual value is not finite");
  return sol;
}

}  // namespace tsil
