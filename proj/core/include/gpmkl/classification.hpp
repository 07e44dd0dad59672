#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "gpmkl/kernels.hpp"
#include "gpmkl/linalg.hpp"

namespace gpmkl {

enum class InferenceMethod { Exact, EP, Laplace };

std::string to_string(InferenceMethod method);
InferenceMethod parse_inference(const std::string& text);  // "exact" | "ep" | "la"

/// EP site approximations  Z~_i N(f_i | mu~_i, sigma2~_i). An uninformative
/// site has sigma2_tilde = +inf.
struct SiteParams {
  Eigen::VectorXd log_z_tilde;
  Eigen::VectorXd mu_tilde;
  Eigen::VectorXd sigma2_tilde;
  // Natural parameters the sweeps actually update, in latent-minus-mean coordinates.
  Eigen::VectorXd tau;
  Eigen::VectorXd nu;
};

struct ClassificationOptions {
  int newton_max_iters = 50;
  double newton_tolerance = 1e-10;
  int ep_max_sweeps = 100;
  double ep_tolerance = 1e-6;
  double ep_damping = 0.9;
};

/// Result of approximate inference on fixed data and hyperparameters.
/// Latent predictive moments at x_* are
///   mean = m + k_*^T pred_weights,
///   var  = k(x_*, x_*) - |L^{-1} (sqrt_precision .* k_*)|^2,
/// with L L^T = I + diag(sqrt_precision) K diag(sqrt_precision).
struct LatentState {
  InferenceMethod method = InferenceMethod::EP;
  Eigen::VectorXd f_hat;
  Eigen::VectorXd prior_weights;  // a with f_hat = K a + m
  Eigen::VectorXd pred_weights;
  Eigen::VectorXd sqrt_precision;
  JitteredCholesky chol_b;
  std::optional<SiteParams> sites;
  double approx_lml = 0.0;
  Eigen::VectorXd lml_gradient;  // empty unless requested
  int iterations = 0;
};

/// Newton search for the posterior mode under the logistic likelihood.
/// Labels are +-1. Throws ConvergenceFailure when the stationarity residual is
/// still above 1e-6 after newton_max_iters.
LatentState laplace_state(const PairwiseStats& stats, const Eigen::VectorXd& y,
                          const HyperParams& hp, const ClassificationOptions& opts = {},
                          bool with_gradient = true);

/// Sequential EP with damped site updates in ascending index order.
/// Throws ConvergenceFailure on a non-positive cavity, NaN, or sweep budget
/// exhaustion. `warm_start` seeds the site natural parameters.
LatentState ep_state(const PairwiseStats& stats, const Eigen::VectorXd& y, const HyperParams& hp,
                     const ClassificationOptions& opts = {}, bool with_gradient = true,
                     const SiteParams* warm_start = nullptr);

/// Max |d log p(y|f)/df - K^{-1}(f - m)| at the returned latent mean.
double stationarity_residual(const LatentState& state, const Eigen::VectorXd& y);

struct LatentPosterior {
  KernelSpec spec;
  HyperParams hp;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  LatentState state;
};

LatentPosterior laplace_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                            const HyperParams& hp, const ClassificationOptions& opts = {});
LatentPosterior ep_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                       const HyperParams& hp, const ClassificationOptions& opts = {});

/// Rebuilds a posterior from stored predictive weights and precisions.
LatentPosterior restore_latent(Eigen::MatrixXd X, Eigen::VectorXd y, const KernelSpec& spec,
                               const HyperParams& hp, InferenceMethod method,
                               Eigen::VectorXd pred_weights, Eigen::VectorXd sqrt_precision,
                               double approx_lml);

struct PredictiveClass {
  double latent_mean = 0.0;
  double latent_var = 0.0;
  double probability = 0.5;  // p(y = +1 | x)
};

PredictiveClass predict_proba(const LatentPosterior& post, const Eigen::VectorXd& x);

}  // namespace gpmkl
