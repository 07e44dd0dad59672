#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpmkl/subspaces.hpp"

namespace gpmkl {

/// Labelled volumes, one flattened volume per row of X.
struct Dataset {
  VolumeDims dims;
  Eigen::MatrixXd X;
  std::vector<int> labels;  // class index in [0, n_classes)
  int n_classes = 2;
  std::string layout = "single";  // layout the data was planted for
  std::vector<std::size_t> ground_truth_bags;

  std::size_t size() const { return labels.size(); }
  void validate() const;
};

/// +1 for the positive class, -1 otherwise.
Eigen::VectorXd one_vs_rest_targets(const std::vector<int>& labels, int positive_class);

}  // namespace gpmkl
