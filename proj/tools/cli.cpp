#include "cli.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpmkl/datagen.hpp"
#include "gpmkl/error.hpp"
#include "gpmkl/eval.hpp"
#include "gpmkl/io.hpp"
#include "gpmkl/subspaces.hpp"
#include "gpmkl/train.hpp"

namespace gpmkl::cli {

namespace {

// Usage problems detected after CLI11 parsing (bad layout strings and the like).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> split_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::istringstream one(tok);
    T v{};
    if (!(one >> v) || !one.eof()) throw UsageError(std::string("bad ") + what + " '" + text + "'");
    out.push_back(v);
  }
  return out;
}

KernelSpec make_spec(const std::string& kernel, const std::string& layout, const VolumeDims& dims) {
  try {
    return KernelSpec{parse_kernel_kind(kernel), parse_layout(layout, dims)};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

InferenceMethod make_inference(const std::string& text) {
  if (text != "ep" && text != "la") throw UsageError("inference must be ep or la");
  return parse_inference(text);
}

struct GenerateArgs {
  std::string dims = "24,24,24", layout = "cube:8", informative, out;
  int classes = 2;
  std::size_t n = 100;
  double effect = 3.0, noise = 1.0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const auto d = split_list<std::size_t>(a.dims, "dims");
  if (d.size() != 3) throw UsageError("dims must be NX,NY,NZ");
  SyntheticConfig cfg;
  cfg.dims = {d[0], d[1], d[2]};
  cfg.n_per_class = a.n;
  cfg.n_classes = a.classes;
  cfg.layout = a.layout;
  if (!a.informative.empty()) cfg.informative_bags = split_list<std::size_t>(a.informative, "informative bag list");
  cfg.effect_size = a.effect;
  cfg.noise_std = a.noise;
  cfg.seed = a.seed;
  Dataset data;
  try {
    data = generate_synthetic(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_dataset(a.out, data);
  out << "wrote " << data.size() << " volumes to " << a.out << '\n';
  return kOk;
}

struct TrainArgs {
  std::string data, kernel = "se", layout = "single", inference = "ep", out;
  int max_iters = 100;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset(a.data);
  const KernelSpec spec = make_spec(a.kernel, a.layout, data.dims);
  TrainOptions opts;
  opts.inference = make_inference(a.inference);
  opts.optimizer.max_iters = a.max_iters;

  ModelBundle bundle;
  bundle.dims = data.dims;
  for (int c = 0; c < data.n_classes; ++c) bundle.classes.push_back(c);
  if (data.n_classes == 2) {
    const Eigen::VectorXd y = one_vs_rest_targets(data.labels, 1);
    const HyperParams init = default_hyperparams(data.X, y, spec, Task::BinaryClassification);
    bundle.models.push_back(train(data.X, y, spec, init, Task::BinaryClassification, opts));
  } else {
    OVAModel ova = ova_train(data.X, data.labels, data.n_classes, spec, opts);
    bundle.models = std::move(ova.models);
  }
  for (std::size_t k = 0; k < bundle.models.size(); ++k) {
    if (bundle.models[k].fallback_triggered) {
      err << "warning: EP failed to converge for model " << k << "; trained with Laplace instead\n";
    }
  }
  write_model(a.out, bundle);
  out << "models: " << bundle.models.size() << '\n';
  for (std::size_t k = 0; k < bundle.models.size(); ++k) {
    const TrainedModel& m = bundle.models[k];
    out << "model " << k << ": lml=" << format6(m.lml) << " inference=" << to_string(m.inference_used)
        << " fallback=" << (m.fallback_triggered ? 1 : 0) << " iterations=" << m.iterations << '\n';
  }
  return kOk;
}

struct CvArgs {
  std::string data, kernel = "se", layout = "single", inference = "ep", report;
  int folds = 10;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  bool pooled_auc = false;
  int max_iters = 100;
};

int cmd_cv(const CvArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset(a.data);
  if (data.n_classes != 2) throw UsageError("cv supports binary datasets only");
  const KernelSpec spec = make_spec(a.kernel, a.layout, data.dims);
  CrossValidationOptions opts;
  opts.folds = a.folds;
  opts.seed = a.seed;
  opts.jobs = a.jobs;
  opts.pooled_auc = a.pooled_auc;
  opts.train.inference = make_inference(a.inference);
  opts.train.optimizer.max_iters = a.max_iters;
  CVReport report;
  try {
    report = cross_validate(data, spec, opts);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_cv_report(a.report, report);
  write_cv_report(out, report);
  if (report.fallback_count > 0) {
    err << "warning: EP fell back to Laplace in " << report.fallback_count << " fold(s)\n";
  }
  if (report.failed_folds == report.folds.size()) {
    err << "error: every fold failed to train\n";
    return kNumericalFailure;
  }
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& input, std::ostream& out, std::ostream& err) {
  const ModelBundle bundle = read_model(std::filesystem::path(model_path));
  const Volume vol = read_volume(input);
  if (!(vol.dims == bundle.dims)) throw FormatError("input volume dims do not match the model");
  Eigen::VectorXd x(static_cast<Eigen::Index>(vol.values.size()));
  for (std::size_t i = 0; i < vol.values.size(); ++i) x[static_cast<Eigen::Index>(i)] = vol.values[i];

  const TrainedModel& first = bundle.models.front();
  if (first.task == Task::Regression) {
    const auto pred = predict_regression(std::get<RegressionPosterior>(first.posterior), x);
    if (pred.variance_clamped) err << "warning: negative predictive variance from round-off clamped to 0\n";
    out << "mean: " << format6(pred.mean) << "\nvariance: " << format6(pred.variance) << '\n';
    return kOk;
  }
  if (!bundle.is_one_vs_all()) {
    if (bundle.classes.size() != 2) throw FormatError("binary model needs two class labels");
    const double p = predict_value(first, x);
    out << "probability: " << format6(p) << '\n';
    out << "label: " << (p >= 0.5 ? bundle.classes[1] : bundle.classes[0]) << '\n';
    return kOk;
  }
  OVAModel ova{bundle.classes, bundle.models};
  const OVAPrediction pred = ova_predict(ova, x);
  out << "label: " << pred.label << '\n';
  for (std::size_t k = 0; k < pred.probabilities.size(); ++k) {
    out << "probability " << bundle.classes[k] << ": " << format6(pred.probabilities[k]) << '\n';
  }
  return kOk;
}

int cmd_relevance(const std::string& report_path, std::ostream& out) {
  const Eigen::MatrixXd weights = read_report_weights(report_path);
  RelevanceReport rel;
  try {
    rel = relevance_scores(weights);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  out << "folds: " << rel.n_folds << '\n';
  for (std::size_t s = 0; s < rel.scores.size(); ++s) out << "bag " << s << ": " << format6(rel.scores[s]) << '\n';
  out << "ranking:";
  for (auto s : rel.ranking) out << ' ' << s;
  out << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian process classifiers with subspace multiple-kernel relevance determination", "gpmkl"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic volumetric dataset");
  generate->add_option("--dims", gen.dims, "NX,NY,NZ")->capture_default_str();
  generate->add_option("--classes", gen.classes, "Number of classes (2 or 3)")->capture_default_str();
  generate->add_option("--n", gen.n, "Instances per class")->capture_default_str();
  generate->add_option("--layout", gen.layout, "slices | cube:E")->capture_default_str();
  generate->add_option("--informative", gen.informative, "Comma-separated informative bag indices");
  generate->add_option("--effect", gen.effect, "Mean shift per informative voxel")->capture_default_str();
  generate->add_option("--noise", gen.noise, "Background noise std")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Learn hyperparameters and write a model");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--kernel", tr.kernel, "lin | se | nn")->capture_default_str();
  train_cmd->add_option("--layout", tr.layout, "single | slices | cube:E")->capture_default_str();
  train_cmd->add_option("--inference", tr.inference, "ep | la")->capture_default_str();
  train_cmd->add_option("--max-iters", tr.max_iters, "Optimizer iteration budget")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Model file")->required();

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  cv_cmd->add_option("--data", cv.data, "Dataset directory")->required();
  cv_cmd->add_option("--kernel", cv.kernel, "lin | se | nn")->capture_default_str();
  cv_cmd->add_option("--layout", cv.layout, "single | slices | cube:E")->capture_default_str();
  cv_cmd->add_option("--inference", cv.inference, "ep | la")->capture_default_str();
  cv_cmd->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--seed", cv.seed, "Fold assignment seed")->capture_default_str();
  cv_cmd->add_option("--jobs", cv.jobs, "Concurrent folds (0: all processors)")->capture_default_str();
  cv_cmd->add_option("--max-iters", cv.max_iters, "Optimizer iteration budget")->capture_default_str();
  cv_cmd->add_flag("--pooled-auc", cv.pooled_auc, "Also report AUC over pooled held-out predictions");
  cv_cmd->add_option("--report", cv.report, "Report file")->required();

  std::string model_path, input;
  auto* predict = app.add_subcommand("predict", "Predict one volume");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--input", input, "Volume file")->required();

  std::string report_path;
  auto* relevance = app.add_subcommand("relevance", "Relevance scores from a CV report");
  relevance->add_option("--report", report_path, "Report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*train_cmd) return cmd_train(tr, out, err);
    if (*cv_cmd) return cmd_cv(cv, out, err);
    if (*predict) return cmd_predict(model_path, input, out, err);
    if (*relevance) return cmd_relevance(report_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace gpmkl::cli
