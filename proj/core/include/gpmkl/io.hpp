#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpmkl/dataset.hpp"
#include "gpmkl/eval.hpp"
#include "gpmkl/train.hpp"

namespace gpmkl {

/// Binary volume: "GPMK", u32 LE nx, ny, nz, then nx*ny*nz f32 LE values,
/// x fastest.
struct Volume {
  VolumeDims dims;
  std::vector<float> values;
};

void write_volume(const std::filesystem::path& path, const Volume& volume);
Volume read_volume(const std::filesystem::path& path);

/// Directory with manifest.txt plus one volume file per instance.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& dir);

/// Everything needed to predict. Regression: no classes, one model.
/// Binary: classes {neg, pos} and one model for the positive class.
/// One-vs-all: one model per class.
struct ModelBundle {
  VolumeDims dims;
  std::vector<int> classes;
  std::vector<TrainedModel> models;

  bool is_one_vs_all() const { return models.size() > 1; }
};

/// Text header with hyperparameters and posterior vectors at 17 significant
/// digits, followed by the training inputs as raw f64 LE.
void write_model(std::ostream& out, const ModelBundle& bundle);
void write_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle read_model(std::istream& in);
ModelBundle read_model(const std::filesystem::path& path);

/// Line-oriented key: value report, numbers at 6 significant digits.
void write_cv_report(std::ostream& out, const CVReport& report);
void write_cv_report(const std::filesystem::path& path, const CVReport& report);

/// Per-fold mixing weights recorded in a report, one row per fold.
Eigen::MatrixXd read_report_weights(const std::filesystem::path& path);

/// printf-style "%.6g".
std::string format6(double v);

}  // namespace gpmkl
