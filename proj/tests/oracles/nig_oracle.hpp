#pragma once

// Conjugate NIG update from raw design matrices with explicit inverses.

#include <Eigen/Dense>

namespace oracle {

struct Nig {
  Eigen::VectorXd mu;
  Eigen::MatrixXd lambda;
  double alpha;
  double beta;
};

inline Nig nig_posterior(const Nig& prior, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Nig post;
  post.lambda = X.transpose() * X + prior.lambda;
  const Eigen::MatrixXd cov = post.lambda.inverse();
  post.mu = cov * (prior.lambda * prior.mu + X.transpose() * y);
  post.alpha = prior.alpha + 0.5 * static_cast<double>(X.rows());
  post.beta = prior.beta + 0.5 * (y.dot(y) + prior.mu.dot(prior.lambda * prior.mu) -
                                   post.mu.dot(post.lambda * post.mu));
  return post;
}

}  // namespace oracle
