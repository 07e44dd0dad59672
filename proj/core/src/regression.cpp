#include "gpmkl/regression.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gpmkl/error.hpp"

namespace gpmkl {

namespace {

double noise_variance(const HyperParams& hp) {
  if (!hp.log_sigma_n) throw std::invalid_argument("regression needs a log_sigma_n hyperparameter");
  return std::exp(2.0 * *hp.log_sigma_n);
}

JitteredCholesky factor_noisy(Eigen::MatrixXd K, const HyperParams& hp) {
  K.diagonal().array() += noise_variance(hp);
  return jittered_cholesky(K);
}

void check_targets(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw std::invalid_argument("regression needs at least one observation");
  if (y.size() != X.rows()) throw std::invalid_argument("target count does not match inputs");
  if (!y.allFinite()) throw std::invalid_argument("targets must be finite");
}

}  // namespace

RegressionPosterior fit_exact(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const KernelSpec& spec, const HyperParams& hp) {
  check_targets(X, y);
  hp.validate(spec);
  RegressionPosterior post{spec, hp, X, factor_noisy(PairwiseStats(X, spec).covariance(hp), hp), {}};
  post.alpha = post.chol.solve(Eigen::VectorXd(y.array() - hp.mean_const));
  return post;
}

RegressionPosterior restore_exact(Eigen::MatrixXd X, const KernelSpec& spec, const HyperParams& hp,
                                  Eigen::VectorXd alpha) {
  hp.validate(spec);
  if (alpha.size() != X.rows()) throw std::invalid_argument("weight count does not match inputs");
  JitteredCholesky chol = factor_noisy(PairwiseStats(X, spec).covariance(hp), hp);
  return RegressionPosterior{spec, hp, std::move(X), std::move(chol), std::move(alpha)};
}

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const KernelSpec& spec, const HyperParams& hp) {
  check_targets(X, y);
  hp.validate(spec);
  return log_marginal_likelihood(PairwiseStats(X, spec), y, hp);
}

LmlResult log_marginal_likelihood(const PairwiseStats& stats, const Eigen::VectorXd& y,
                                  const HyperParams& hp) {
  const auto n = static_cast<double>(y.size());
  const JitteredCholesky chol = factor_noisy(stats.covariance(hp), hp);
  const Eigen::VectorXd r = y.array() - hp.mean_const;
  const Eigen::VectorXd alpha = chol.solve(r);

  LmlResult out;
  out.value = -0.5 * r.dot(alpha) - 0.5 * chol.log_determinant() -
              0.5 * n * std::log(2.0 * std::numbers::pi);

  // d lml / d theta = 1/2 tr((alpha alpha^T - A^{-1}) dA/dtheta)
  const Eigen::MatrixXd W = alpha * alpha.transpose() - chol.inverse();
  out.gradient.resize(static_cast<Eigen::Index>(hp.size()));
  const std::size_t kernel_params = hp.size() - 2;
  for (std::size_t k = 0; k < kernel_params; ++k) {
    out.gradient[static_cast<Eigen::Index>(k)] =
        0.5 * W.cwiseProduct(stats.covariance_gradient(hp, k)).sum();
  }
  out.gradient[static_cast<Eigen::Index>(hp.noise_index())] = noise_variance(hp) * W.trace();
  out.gradient[static_cast<Eigen::Index>(hp.mean_index())] = alpha.sum();
  return out;
}

PredictiveGaussian predict_regression(const RegressionPosterior& post, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != post.spec.layout.dim()) {
    throw std::invalid_argument("test input length does not match the model");
  }
  const Eigen::MatrixXd xs = x.transpose();
  const Eigen::VectorXd k_star = PairwiseStats(post.X, xs, post.spec).covariance(post.hp).col(0);
  const double prior = self_covariance(xs, post.spec, post.hp)[0];

  PredictiveGaussian out;
  out.mean = post.hp.mean_const + k_star.dot(post.alpha);
  const Eigen::VectorXd v = post.chol.solve_lower(k_star);
  out.variance = prior - v.squaredNorm();
  if (out.variance < 0.0) {
    if (out.variance < -1e-10) throw NumericalError("predictive variance is negative beyond round-off");
    out.variance = 0.0;
    out.variance_clamped = true;
  }
  return out;
}

}  // namespace gpmkl
