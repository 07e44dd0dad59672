#pragma once

#include <stdexcept>
#include <string>

namespace gpmkl {

/// Matrix factorization or other floating-point breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative inference routine (EP sweeps, Newton) did not settle.
class ConvergenceFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed on-disk dataset, model, or report.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpmkl
