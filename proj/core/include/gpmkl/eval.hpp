#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpmkl/dataset.hpp"
#include "gpmkl/train.hpp"

namespace gpmkl {

/// Fold id in [0, k) for every sample. Each class is shuffled with the seed
/// and dealt round-robin, continuing across classes, so per-fold class counts
/// differ by at most one.
std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

struct BinaryRates {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

/// Predicts positive when probability >= threshold. Labels are +-1.
ConfusionCounts count_confusion(std::span<const double> probabilities, std::span<const double> labels,
                                double threshold = 0.5);

/// Throws std::domain_error naming the rate whose denominator is zero.
BinaryRates confusion_metrics(const ConfusionCounts& counts);

/// Area under the ROC curve as the probability that a random positive
/// outscores a random negative, ties counting one half. Labels are +-1.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

struct OVAModel {
  std::vector<int> classes;
  std::vector<TrainedModel> models;  // models[k] separates classes[k] from the rest
};

struct OVAPrediction {
  int label = 0;
  std::vector<double> probabilities;
};

OVAModel ova_train(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                   const KernelSpec& spec, const TrainOptions& opts = {});
/// Argmax of the per-class probabilities; ties go to the lower class index.
OVAPrediction ova_predict(const OVAModel& model, const Eigen::VectorXd& x);

struct FoldResult {
  double accuracy = 0.0, sensitivity = 0.0, specificity = 0.0, auc = 0.0;
  Eigen::VectorXd weights;  // beta_s = sigma_f_s^2
  bool fallback = false;
  InferenceMethod inference = InferenceMethod::EP;
  std::string error;  // non-empty when the fold failed
  std::vector<std::size_t> test_indices;
  std::vector<double> test_probabilities;

  bool ok() const { return error.empty(); }
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct CVReport {
  std::string kernel;
  std::string layout;
  std::string inference;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  Summary accuracy, sensitivity, specificity, auc;
  std::size_t fallback_count = 0;
  std::size_t failed_folds = 0;
  std::optional<double> pooled_auc;

  std::size_t num_bags() const;
  /// Successful folds' mixing weights, one row per fold.
  Eigen::MatrixXd weight_matrix() const;
};

struct CrossValidationOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  unsigned jobs = 0;  // 0: hardware concurrency
  bool pooled_auc = false;
  TrainOptions train;
};

/// Binary k-fold CV; class 1 is the positive class. Folds run concurrently
/// and the report does not depend on scheduling.
CVReport cross_validate(const Dataset& data, const KernelSpec& spec, const CrossValidationOptions& opts);

/// Sample mean and (n-1)-normalized standard deviation.
Summary summarize(std::span<const double> values);

}  // namespace gpmkl
