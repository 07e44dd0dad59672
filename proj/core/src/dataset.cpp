#include "gpmkl/dataset.hpp"

#include <stdexcept>
#include <string>

namespace gpmkl {

void Dataset::validate() const {
  dims.validate();
  if (static_cast<std::size_t>(X.cols()) != dims.size()) throw std::invalid_argument("dataset width does not match dims");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw std::invalid_argument("dataset label count mismatch");
  if (n_classes < 2) throw std::invalid_argument("dataset needs at least two classes");
  for (int c : labels) {
    if (c < 0 || c >= n_classes) throw std::invalid_argument("label outside declared classes");
  }
}

Eigen::VectorXd one_vs_rest_targets(const std::vector<int>& labels, int positive_class) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels[i] == positive_class ? 1.0 : -1.0;
  return y;
}

}  // namespace gpmkl
