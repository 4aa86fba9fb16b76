#pragma once

#include <optional>

#include "tsil/core.hpp"

namespace tsil {

/// Normal-inverse-gamma posterior over (theta, sigma^2) for one action:
/// sigma^2 ~ IG(alpha, beta), theta | sigma^2 ~ N(mu, sigma^2 lambda^-1).
struct NigParams {
  Vector mu;
  Matrix lambda;  // precision
  double alpha = 1.0;
  double beta = 1.0;

  int dim() const { return static_cast<int>(mu.size()); }

  /// NIG(0, c I, alpha, beta).
  static NigParams isotropic(int dim, double precision_scale, double alpha, double beta);

  /// Throws DimensionError/NumericalError when shapes or positivity are violated.
  void validate() const;
};

/// Accumulated X^T X, X^T y, y^T y over feature rows (intercept already appended).
struct SufficientStats {
  Matrix xtx;
  Vector xty;
  double yty = 0.0;
  long n = 0;

  explicit SufficientStats(int dim = 0)
      : xtx(Matrix::Zero(dim, dim)), xty(Vector::Zero(dim)) {}

  int dim() const { return static_cast<int>(xty.size()); }
  void add(const Vector& features, double reward);
  void merge(const SufficientStats& other);
};

/// Cached upper factor L^T of the precision, lambda = L L^T.
class CholCache {
 public:
  CholCache() = default;

  /// Factors lambda; on failure retries once with 1e-8 I added, then throws NumericalError.
  static CholCache factor(const Matrix& lambda);

  const Matrix& upper() const { return upper_; }
  int dim() const { return static_cast<int>(upper_.rows()); }

  /// Solves L^T z = rhs by back-substitution.
  Vector solve_upper(const Vector& rhs) const;
  /// Solves L w = rhs by forward substitution.
  Vector solve_lower(const Vector& rhs) const;

 private:
  Matrix upper_;
};

/// Conjugate update of a NIG prior with sufficient statistics.
NigParams nig_update(const NigParams& prior, const SufficientStats& data);

struct NigDraw {
  Vector theta;
  double sigma2 = 0.0;
};

/// Draws sigma^2 ~ IG(alpha, beta), then theta = mu + z with (1/sigma) L^T z = zeta.
/// `fixed_sigma` bypasses the inverse-gamma draw (test hook).
NigDraw nig_sample(const NigParams& params, const CholCache& cache, Rng& rng,
                   std::optional<double> fixed_sigma = std::nullopt);

/// Posterior-mean prediction mu^T features.
double nig_mean_reward(const NigParams& params, const Vector& features);

/// Appends the constant-1 intercept feature.
Vector with_intercept(const Context& context);

/// One action's Bayesian linear regression on raw contexts plus an appended intercept.
class NigModel {
 public:
  NigModel() = default;
  /// `prior` is over context_dim + 1 features.
  explicit NigModel(NigParams prior);

  int context_dim() const { return prior_.dim() - 1; }
  const NigParams& prior() const { return prior_; }
  const NigParams& posterior() const { return posterior_; }
  const SufficientStats& stats() const { return stats_; }
  const CholCache& cholesky() const { return chol_; }

  void observe(const Context& context, double reward);
  /// Drops all observations.
  void reset();
  /// Recomputes the posterior from prior + all observations and refreshes the factor.
  void refresh();
  /// Replaces the posterior directly (test hook / constructed posteriors).
  void set_posterior(NigParams posterior);

  NigDraw sample(Rng& rng) const { return nig_sample(posterior_, chol_, rng); }
  double sample_reward(const Context& context, Rng& rng) const;
  double mean_reward(const Context& context) const;

  /// For a fixed context the sampled reward theta^T x is mu^T x + sigma * ||L^-1 x|| * xi.
  struct Projection {
    double mean = 0.0;
    double scale = 0.0;  // ||L^-1 x||
  };
  Projection project(const Context& context) const;

 private:
  NigParams prior_;
  NigParams posterior_;
  SufficientStats stats_;
  CholCache chol_;
};

}  // namespace tsil
