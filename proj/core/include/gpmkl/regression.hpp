#pragma once

#include <Eigen/Dense>

#include "gpmkl/kernels.hpp"
#include "gpmkl/linalg.hpp"

namespace gpmkl {

struct PredictiveGaussian {
  double mean = 0.0;
  double variance = 0.0;
  /// Set when a round-off negative variance was clamped to zero.
  bool variance_clamped = false;
};

/// Exact GP regression posterior with Gaussian noise.
struct RegressionPosterior {
  KernelSpec spec;
  HyperParams hp;
  Eigen::MatrixXd X;
  JitteredCholesky chol;   // of K + sigma_n^2 I (+ jitter)
  Eigen::VectorXd alpha;   // (K + sigma_n^2 I)^{-1} (y - m)
};

/// Value and gradient with respect to every entry of HyperParams::to_vector().
struct LmlResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

RegressionPosterior fit_exact(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const KernelSpec& spec, const HyperParams& hp);

/// Rebuilds a posterior from stored weights; the factorization is recomputed.
RegressionPosterior restore_exact(Eigen::MatrixXd X, const KernelSpec& spec, const HyperParams& hp,
                                  Eigen::VectorXd alpha);

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const KernelSpec& spec, const HyperParams& hp);
/// Same, reusing precomputed pairwise geometry of X.
LmlResult log_marginal_likelihood(const PairwiseStats& stats, const Eigen::VectorXd& y,
                                  const HyperParams& hp);

PredictiveGaussian predict_regression(const RegressionPosterior& post, const Eigen::VectorXd& x);

}  // namespace gpmkl
