#include "gpmkl/linalg.hpp"

#include <cmath>
#include <string>

#include "gpmkl/error.hpp"

namespace gpmkl {

double JitteredCholesky::log_determinant() const {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd JitteredCholesky::solve_lower(const Eigen::MatrixXd& rhs) const {
  return llt.matrixL().solve(rhs);
}

Eigen::MatrixXd JitteredCholesky::inverse() const {
  const auto n = llt.matrixLLT().rows();
  return llt.solve(Eigen::MatrixXd::Identity(n, n));
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw NumericalError("Cholesky needs a non-empty square matrix");
  if (!A.allFinite()) throw NumericalError("matrix to factor has non-finite entries");

  const double scale = std::abs(A.trace()) / static_cast<double>(A.rows());
  JitteredCholesky out;
  out.llt.compute(A);
  if (out.llt.info() == Eigen::Success) return out;

  Eigen::MatrixXd shifted = A;
  for (double rel = 1e-10; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * scale;
    shifted.diagonal() = A.diagonal().array() + jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("Cholesky failed after jitter escalation to 1e-4 * trace/N");
}

}  // namespace gpmkl
