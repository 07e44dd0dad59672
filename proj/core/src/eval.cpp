#include "gpmkl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace gpmkl {

std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least two folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("class " + std::to_string(label) + " has fewer members than folds");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size(), 0);
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) fold[idx] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

ConfusionCounts count_confusion(std::span<const double> probabilities, std::span<const double> labels,
                                double threshold) {
  if (probabilities.size() != labels.size()) throw std::invalid_argument("score and label counts differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    const bool actual = labels[i] > 0.0;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

BinaryRates confusion_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw std::domain_error("accuracy undefined: no cases");
  if (c.tp + c.fn == 0) throw std::domain_error("sensitivity undefined: no positive cases");
  if (c.tn + c.fp == 0) throw std::domain_error("specificity undefined: no negative cases");
  BinaryRates r;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("score and label counts differ");
  // Mann-Whitney statistic with mid-ranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j + 1);  // 1-based ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] > 0.0) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("AUC needs both classes");
  const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

OVAModel ova_train(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                   const KernelSpec& spec, const TrainOptions& opts) {
  if (n_classes < 2) throw std::invalid_argument("one-vs-all needs at least two classes");
  const std::vector<int> lab(labels.begin(), labels.end());
  OVAModel model;
  for (int c = 0; c < n_classes; ++c) {
    const Eigen::VectorXd y = one_vs_rest_targets(lab, c);
    const HyperParams init = default_hyperparams(X, y, spec, Task::BinaryClassification);
    model.classes.push_back(c);
    model.models.push_back(train(X, y, spec, init, Task::BinaryClassification, opts));
  }
  return model;
}

OVAPrediction ova_predict(const OVAModel& model, const Eigen::VectorXd& x) {
  if (model.models.size() != model.classes.size() || model.models.size() < 2) {
    throw std::invalid_argument("one-vs-all model needs one binary model per class");
  }
  OVAPrediction out;
  std::size_t best = 0;
  for (std::size_t k = 0; k < model.models.size(); ++k) {
    out.probabilities.push_back(predict_value(model.models[k], x));
    if (out.probabilities[k] > out.probabilities[best]) best = k;
  }
  out.label = model.classes[best];
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return {std::nan(""), std::nan("")};
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::size_t CVReport::num_bags() const {
  for (const auto& f : folds) {
    if (f.ok()) return static_cast<std::size_t>(f.weights.size());
  }
  return 0;
}

Eigen::MatrixXd CVReport::weight_matrix() const {
  const auto S = static_cast<Eigen::Index>(num_bags());
  std::vector<const FoldResult*> good;
  for (const auto& f : folds) {
    if (f.ok()) good.push_back(&f);
  }
  Eigen::MatrixXd W(static_cast<Eigen::Index>(good.size()), S);
  for (std::size_t r = 0; r < good.size(); ++r) W.row(static_cast<Eigen::Index>(r)) = good[r]->weights.transpose();
  return W;
}

namespace {

FoldResult run_fold(const Dataset& data, const KernelSpec& spec, const std::vector<int>& fold_of, int fold,
                    const CrossValidationOptions& opts) {
  FoldResult out;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    (fold_of[i] == fold ? out.test_indices : train_idx).push_back(i);
  }
  const auto rows = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(idx.size()), data.X.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) M.row(static_cast<Eigen::Index>(r)) = data.X.row(static_cast<Eigen::Index>(idx[r]));
    return M;
  };
  const auto targets = [&](const std::vector<std::size_t>& idx) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) y[static_cast<Eigen::Index>(r)] = data.labels[idx[r]] == 1 ? 1.0 : -1.0;
    return y;
  };

  try {
    const Eigen::MatrixXd X_train = rows(train_idx);
    const Eigen::VectorXd y_train = targets(train_idx);
    const HyperParams init = default_hyperparams(X_train, y_train, spec, Task::BinaryClassification);
    const TrainedModel model = train(X_train, y_train, spec, init, Task::BinaryClassification, opts.train);
    out.fallback = model.fallback_triggered;
    out.inference = model.inference_used;
    out.weights = model.hp.mixing_weights();

    const Eigen::VectorXd y_test = targets(out.test_indices);
    for (std::size_t i : out.test_indices) {
      out.test_probabilities.push_back(predict_value(model, data.X.row(static_cast<Eigen::Index>(i)).transpose()));
    }
    const std::span<const double> labels(y_test.data(), static_cast<std::size_t>(y_test.size()));
    const BinaryRates rates = confusion_metrics(count_confusion(out.test_probabilities, labels));
    out.accuracy = rates.accuracy;
    out.sensitivity = rates.sensitivity;
    out.specificity = rates.specificity;
    out.auc = roc_auc(out.test_probabilities, labels);
  } catch (const std::exception& e) {
    out.error = e.what();
    if (out.error.empty()) out.error = "unknown failure";
  }
  return out;
}

}  // namespace

CVReport cross_validate(const Dataset& data, const KernelSpec& spec, const CrossValidationOptions& opts) {
  data.validate();
  if (data.n_classes != 2) throw std::invalid_argument("cross-validation supports binary datasets");
  const std::vector<int> fold_of = stratified_kfold(data.labels, opts.folds, opts.seed);

  CVReport report;
  report.kernel = to_string(spec.kind);
  report.layout = spec.layout.describe();
  report.inference = to_string(opts.train.inference);
  report.seed = opts.seed;
  report.folds.resize(static_cast<std::size_t>(opts.folds));

  unsigned jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(opts.folds));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int f = next++; f < opts.folds; f = next++) {
      report.folds[static_cast<std::size_t>(f)] = run_fold(data, spec, fold_of, f, opts);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }

  std::vector<double> acc, sens, spec_rates, aucs, pooled_scores, pooled_labels;
  for (const auto& f : report.folds) {
    if (!f.ok()) {
      ++report.failed_folds;
      continue;
    }
    if (f.fallback) ++report.fallback_count;
    acc.push_back(f.accuracy);
    sens.push_back(f.sensitivity);
    spec_rates.push_back(f.specificity);
    aucs.push_back(f.auc);
    for (std::size_t t = 0; t < f.test_indices.size(); ++t) {
      pooled_scores.push_back(f.test_probabilities[t]);
      pooled_labels.push_back(data.labels[f.test_indices[t]] == 1 ? 1.0 : -1.0);
    }
  }
  report.accuracy = summarize(acc);
  report.sensitivity = summarize(sens);
  report.specificity = summarize(spec_rates);
  report.auc = summarize(aucs);
  if (opts.pooled_auc && !pooled_scores.empty()) report.pooled_auc = roc_auc(pooled_scores, pooled_labels);
  return report;
}

}  // namespace gpmkl
