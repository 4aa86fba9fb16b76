#include "tsil/bayes_linear.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace tsil {

NigParams NigParams::isotropic(int dim, double precision_scale, double alpha, double beta) {
  NigParams p;
  p.mu = Vector::Zero(dim);
  p.lambda = precision_scale * Matrix::Identity(dim, dim);
  p.alpha = alpha;
  p.beta = beta;
  p.validate();
  return p;
}

void NigParams::validate() const {
  if (lambda.rows() != mu.size() || lambda.cols() != mu.size()) {
    throw DimensionError("NIG precision shape does not match mean");
  }
  if (!(alpha > 0.0) || !(beta > 0.0)) throw NumericalError("NIG alpha and beta must be > 0");
  if (!mu.allFinite() || !lambda.allFinite()) throw NumericalError("NIG parameters not finite");
  if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + lambda.cwiseAbs().maxCoeff())) {
    throw NumericalError("NIG precision is not symmetric");
  }
}

void SufficientStats::add(const Vector& features, double reward) {
  check_dim(features, dim(), "features");
  xtx.selfadjointView<Eigen::Lower>().rankUpdate(features);
  xtx.triangularView<Eigen::StrictlyUpper>() = xtx.transpose();
  xty.noalias() += reward * features;
  yty += reward * reward;
  ++n;
}

void SufficientStats::merge(const SufficientStats& other) {
  if (other.dim() != dim()) throw DimensionError("sufficient statistics dimension mismatch");
  xtx += other.xtx;
  xty += other.xty;
  yty += other.yty;
  n += other.n;
}

namespace {

Eigen::LLT<Matrix> robust_llt(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  llt.compute(m + 1e-8 * Matrix::Identity(m.rows(), m.cols()));
  if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  return llt;
}

}  // namespace

CholCache CholCache::factor(const Matrix& lambda) {
  CholCache c;
  c.upper_ = robust_llt(lambda).matrixU();
  return c;
}

Vector CholCache::solve_upper(const Vector& rhs) const {
  check_dim(rhs, dim(), "rhs");
  return upper_.triangularView<Eigen::Upper>().solve(rhs);
}

Vector CholCache::solve_lower(const Vector& rhs) const {
  check_dim(rhs, dim(), "rhs");
  return upper_.transpose().triangularView<Eigen::Lower>().solve(rhs);
}

NigParams nig_update(const NigParams& prior, const SufficientStats& data) {
  if (data.dim() != prior.dim()) throw DimensionError("statistics and prior dimensions differ");
  if (data.n == 0) return prior;

  NigParams post;
  post.lambda = data.xtx + prior.lambda;
  const Vector prior_natural = prior.lambda * prior.mu;
  const auto llt = robust_llt(post.lambda);
  post.mu = llt.solve(prior_natural + data.xty);
  post.alpha = prior.alpha + 0.5 * static_cast<double>(data.n);
  const double quad = data.yty + prior.mu.dot(prior_natural) - post.mu.dot(post.lambda * post.mu);
  post.beta = prior.beta + 0.5 * quad;
  if (!(post.beta > 0.0) || !std::isfinite(post.beta)) {
    throw NumericalError("posterior beta is not positive; statistics are corrupted");
  }
  return post;
}

NigDraw nig_sample(const NigParams& params, const CholCache& cache, Rng& rng,
                   std::optional<double> fixed_sigma) {
  if (cache.dim() != params.dim()) throw DimensionError("Cholesky cache does not match params");
  NigDraw draw;
  double sigma = 0.0;
  if (fixed_sigma) {
    sigma = *fixed_sigma;
    draw.sigma2 = sigma * sigma;
  } else {
    draw.sigma2 = rng.inverse_gamma(params.alpha, params.beta);
    sigma = std::sqrt(draw.sigma2);
  }
  Vector zeta(params.dim());
  for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta[i] = rng.normal();
  // L^T z = sigma * zeta
  cache.upper().triangularView<Eigen::Upper>().solveInPlace(zeta);
  draw.theta = params.mu + sigma * zeta;
  return draw;
}

double nig_mean_reward(const NigParams& params, const Vector& features) {
  check_dim(features, params.dim(), "features");
  return params.mu.dot(features);
}

Vector with_intercept(const Context& context) {
  Vector x(context.size() + 1);
  x.head(context.size()) = context;
  x[context.size()] = 1.0;
  return x;
}

NigModel::NigModel(NigParams prior)
    : prior_(std::move(prior)), posterior_(prior_), stats_(prior_.dim()) {
  prior_.validate();
  if (prior_.dim() < 1) throw DimensionError("NIG model needs at least the intercept feature");
  chol_ = CholCache::factor(posterior_.lambda);
}

void NigModel::observe(const Context& context, double reward) {
  check_dim(context, context_dim(), "context");
  stats_.add(with_intercept(context), reward);
}

void NigModel::reset() { stats_ = SufficientStats(prior_.dim()); }

void NigModel::refresh() {
  posterior_ = nig_update(prior_, stats_);
  chol_ = CholCache::factor(posterior_.lambda);
}

void NigModel::set_posterior(NigParams posterior) {
  posterior.validate();
  if (posterior.dim() != prior_.dim()) throw DimensionError("posterior dimension mismatch");
  posterior_ = std::move(posterior);
  chol_ = CholCache::factor(posterior_.lambda);
}

double NigModel::sample_reward(const Context& context, Rng& rng) const {
  check_dim(context, context_dim(), "context");
  const NigDraw d = sample(rng);
  return d.theta.head(context.size()).dot(context) + d.theta[context.size()];
}

double NigModel::mean_reward(const Context& context) const {
  return nig_mean_reward(posterior_, with_intercept(context));
}

NigModel::Projection NigModel::project(const Context& context) const {
  const Vector x = with_intercept(context);
  return {posterior_.mu.dot(x), chol_.solve_lower(x).norm()};
}

}  // namespace tsil
