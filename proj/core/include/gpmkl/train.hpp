#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "gpmkl/classification.hpp"
#include "gpmkl/kernels.hpp"
#include "gpmkl/optimize.hpp"
#include "gpmkl/regression.hpp"

namespace gpmkl {

enum class Task { Regression, BinaryClassification };

std::string to_string(Task task);

struct TrainOptions {
  OptimizeOptions optimizer;
  /// EP or Laplace for classification; ignored for regression.
  InferenceMethod inference = InferenceMethod::EP;
  ClassificationOptions inference_options;
};

struct TrainedModel {
  Task task = Task::BinaryClassification;
  KernelSpec spec;
  HyperParams hp;
  std::variant<RegressionPosterior, LatentPosterior> posterior;
  double lml = 0.0;
  InferenceMethod inference_used = InferenceMethod::EP;
  bool fallback_triggered = false;
  int iterations = 0;

  const Eigen::MatrixXd& inputs() const;
};

/// Conventional starting point: unit amplitudes, per-bag median-distance
/// bandwidths, noise 0.1, and the target mean (regression) or zero.
HyperParams default_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const KernelSpec& spec, Task task);

/// Maximizes the (approximate) log marginal likelihood over every
/// hyperparameter and refits the posterior at the optimum. For EP, a
/// ConvergenceFailure at the starting point or at the final refit restarts
/// the whole optimization with Laplace and sets fallback_triggered. Throws
/// NumericalError when no inference route succeeds.
TrainedModel train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                   const HyperParams& init_hp, Task task, const TrainOptions& opts = {});

/// Regression: predictive mean. Classification: averaged probability of +1.
double predict_value(const TrainedModel& model, const Eigen::VectorXd& x);

}  // namespace gpmkl
