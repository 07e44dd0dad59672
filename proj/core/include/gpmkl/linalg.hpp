#pragma once

#include <Eigen/Dense>

namespace gpmkl {

/// Cholesky factor of A + jitter * I. Jitter starts at zero and, on failure,
/// escalates from 1e-10 * trace/N by factors of ten up to 1e-4 * trace/N.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  const Eigen::MatrixXd& matrix_l() const { return llt.matrixLLT(); }
  /// log |A + jitter I|
  double log_determinant() const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt.solve(rhs); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt.solve(rhs); }
  /// L^{-1} rhs
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd inverse() const;
};

/// Throws NumericalError when every jitter level fails.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& A);

}  // namespace gpmkl
