#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpmkl/datagen.hpp"
#include "gpmkl/eval.hpp"
#include "oracles.hpp"

using namespace gpmkl;
using namespace gpmkl::testing;

namespace {

std::vector<int> class_counts(const std::vector<int>& folds, const std::vector<int>& labels, int fold, int n_classes) {
  std::vector<int> c(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] == fold) ++c[static_cast<std::size_t>(labels[i])];
  }
  return c;
}

}  // namespace

TEST(StratifiedKFold, ExactDivision) {
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[i] = i % 2;
  const auto folds = stratified_kfold(labels, 10, 5);
  for (int f = 0; f < 10; ++f) EXPECT_EQ(class_counts(folds, labels, f, 2), (std::vector<int>{2, 2}));
}

TEST(StratifiedKFold, UnevenClassesAndDeterminism) {
  std::vector<int> labels(41);
  for (int i = 0; i < 41; ++i) labels[i] = i < 21 ? 0 : 1;
  const auto folds = stratified_kfold(labels, 10, 9);
  for (int c = 0; c < 2; ++c) {
    int lo = 1000, hi = 0;
    for (int f = 0; f < 10; ++f) {
      const int n = class_counts(folds, labels, f, 2)[static_cast<std::size_t>(c)];
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1);
  }
  int lo = 1000, hi = 0;
  for (int f = 0; f < 10; ++f) {
    const auto c = class_counts(folds, labels, f, 2);
    lo = std::min(lo, c[0] + c[1]);
    hi = std::max(hi, c[0] + c[1]);
  }
  EXPECT_LE(hi - lo, 1);
  EXPECT_EQ(folds, stratified_kfold(labels, 10, 9));
  EXPECT_NE(folds, stratified_kfold(labels, 10, 10));
}

TEST(StratifiedKFold, Errors) {
  std::vector<int> labels{0, 0, 0, 1, 1};
  EXPECT_THROW(stratified_kfold(labels, 3, 0), std::invalid_argument);
  EXPECT_THROW(stratified_kfold(labels, 1, 0), std::invalid_argument);
}

TEST(Confusion, Examples) {
  const auto perfect = confusion_metrics({10, 10, 0, 0});
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.sensitivity, 1.0);
  EXPECT_EQ(perfect.specificity, 1.0);
  ConfusionCounts c;
  c.tp = 9;
  c.fn = 1;
  c.tn = 8;
  c.fp = 2;
  const auto r = confusion_metrics(c);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.85);
  EXPECT_DOUBLE_EQ(r.sensitivity, 0.9);
  EXPECT_DOUBLE_EQ(r.specificity, 0.8);
  ConfusionCounts no_pos;
  no_pos.tn = 3;
  EXPECT_THROW(confusion_metrics(no_pos), std::domain_error);
  EXPECT_THROW(confusion_metrics({}), std::domain_error);
}

TEST(Confusion, ThresholdAtHalfIsPositive) {
  const std::vector<double> p{0.5, 0.49, 0.9, 0.1}, y{1, 1, -1, -1};
  const auto c = count_confusion(p, y);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
}

TEST(Auc, Examples) {
  const std::vector<double> y{1, 1, -1, -1, 1};
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.1, 0.2, 0.7}, y), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>(5, 0.3), y), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), std::invalid_argument);
}

TEST(Auc, MatchesPairwiseOracleAndIsRankInvariant) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 11;
    std::vector<double> s(n), y(n);
    std::uniform_int_distribution<int> level(0, 4);  // coarse levels force ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = 0.2 * level(rng);
      y[i] = (i < 1 || (i > 1 && rng() % 2)) ? 1.0 : -1.0;
    }
    y[1] = -1.0;
    const double auc = roc_auc(s, y);
    EXPECT_NEAR(auc, pairwise_auc(s, y), 1e-12);
    std::vector<double> t(n);
    std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(3 * v) - 7; });
    EXPECT_NEAR(roc_auc(t, y), auc, 1e-12);
  }
}

TEST(Summary, SampleStatistics) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(summarize(std::vector<double>{2.0}).stddev, 0.0);
}

TEST(Ova, ThreeSeparatedClusters) {
  SyntheticConfig cfg;
  cfg.dims = {4, 4, 3};
  cfg.layout = "slices";
  cfg.n_classes = 3;
  cfg.informative_bags = {0, 1, 2};
  cfg.effect_size = 4.0;
  cfg.n_per_class = 20;
  cfg.seed = 1;
  const Dataset train_set = generate_synthetic(cfg);
  cfg.seed = 2;
  const Dataset test_set = generate_synthetic(cfg);
  const KernelSpec spec{KernelKind::Linear, slice_layout(cfg.dims)};
  const OVAModel model = ova_train(train_set.X, train_set.labels, 3, spec);
  ASSERT_EQ(model.models.size(), 3u);
  int correct = 0;
  for (Eigen::Index i = 0; i < test_set.X.rows(); ++i) {
    const auto p = ova_predict(model, test_set.X.row(i).transpose());
    EXPECT_EQ(p.probabilities.size(), 3u);
    correct += p.label == test_set.labels[static_cast<std::size_t>(i)];
  }
  EXPECT_GE(correct / static_cast<double>(test_set.size()), 0.95);
}

TEST(Ova, TwoClassesAgreeWithBinaryDecision) {
  SyntheticConfig cfg;
  cfg.dims = {3, 3, 2};
  cfg.layout = "slices";
  cfg.informative_bags = {1};
  cfg.effect_size = 1.0;
  cfg.n_per_class = 12;
  const Dataset d = generate_synthetic(cfg);
  const KernelSpec spec{KernelKind::SquaredExponential, slice_layout(cfg.dims)};
  const OVAModel model = ova_train(d.X, d.labels, 2, spec);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const auto p = ova_predict(model, d.X.row(i).transpose());
    const double binary = predict_value(model.models[1], d.X.row(i).transpose());
    if (std::abs(binary - 0.5) > 0.05 && std::abs(p.probabilities[0] + p.probabilities[1] - 1.0) < 0.05) {
      EXPECT_EQ(p.label, binary >= 0.5 ? 1 : 0);
    }
  }
}

TEST(Ova, ArgmaxTiesGoToLowerClass) {
  SyntheticConfig cfg;
  cfg.dims = {2, 2, 2};
  cfg.layout = "slices";
  cfg.n_per_class = 6;
  const Dataset d = generate_synthetic(cfg);
  const KernelSpec spec{KernelKind::Linear, single_layout(8)};
  OVAModel model = ova_train(d.X, d.labels, 2, spec);
  model.models[1] = model.models[0];  // identical scorers tie everywhere
  EXPECT_EQ(ova_predict(model, d.X.row(0).transpose()).label, 0);
}

TEST(CrossValidate, DuplicatedPointsAreMemorized) {
  Dataset d;
  d.dims = {2, 1, 1};
  d.X.resize(20, 2);
  for (int i = 0; i < 20; ++i) {
    d.X.row(i) = i % 2 ? Eigen::RowVector2d(1.0, 2.0) : Eigen::RowVector2d(-1.5, 0.5);
    d.labels.push_back(i % 2);
  }
  CrossValidationOptions opts;
  opts.folds = 5;
  opts.seed = 3;
  opts.jobs = 2;
  opts.pooled_auc = true;
  const CVReport r = cross_validate(d, {KernelKind::SquaredExponential, single_layout(2)}, opts);
  ASSERT_EQ(r.folds.size(), 5u);
  for (const auto& f : r.folds) {
    ASSERT_TRUE(f.ok()) << f.error;
    EXPECT_EQ(f.accuracy, 1.0);
  }
  EXPECT_EQ(r.accuracy.mean, 1.0);
  EXPECT_EQ(r.failed_folds, 0u);
  ASSERT_TRUE(r.pooled_auc.has_value());
  EXPECT_EQ(*r.pooled_auc, 1.0);
  EXPECT_EQ(r.weight_matrix().rows(), 5);
}

TEST(CrossValidate, IndependentOfScheduling) {
  SyntheticConfig cfg;
  cfg.dims = {3, 3, 3};
  cfg.layout = "slices";
  cfg.informative_bags = {0};
  cfg.n_per_class = 10;
  const Dataset d = generate_synthetic(cfg);
  const KernelSpec spec{KernelKind::SquaredExponential, slice_layout(cfg.dims)};
  CrossValidationOptions one;
  one.folds = 4;
  one.jobs = 1;
  CrossValidationOptions three = one;
  three.jobs = 3;
  const CVReport a = cross_validate(d, spec, one), b = cross_validate(d, spec, three);
  EXPECT_EQ(a.weight_matrix(), b.weight_matrix());
  EXPECT_EQ(a.accuracy.mean, b.accuracy.mean);
  EXPECT_EQ(a.auc.mean, b.auc.mean);
}

TEST(CrossValidate, FailedFoldsAreRecorded) {
  SyntheticConfig cfg;
  cfg.dims = {2, 2, 2};
  cfg.layout = "slices";
  cfg.n_per_class = 6;
  const Dataset d = generate_synthetic(cfg);
  CrossValidationOptions opts;
  opts.folds = 3;
  opts.train.inference = InferenceMethod::Exact;  // not valid for classification
  const CVReport r = cross_validate(d, {KernelKind::Linear, single_layout(8)}, opts);
  EXPECT_EQ(r.failed_folds, 3u);
  for (const auto& f : r.folds) EXPECT_FALSE(f.ok());
}

TEST(CrossValidate, RejectsMulticlass) {
  SyntheticConfig cfg;
  cfg.dims = {2, 2, 2};
  cfg.layout = "slices";
  cfg.n_classes = 3;
  cfg.n_per_class = 6;
  EXPECT_THROW(cross_validate(generate_synthetic(cfg), {KernelKind::Linear, single_layout(8)}, {}),
               std::invalid_argument);
}
