#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace gpmkl {

struct OptimizeOptions {
  int max_iters = 100;
  double grad_tol = 1e-5;         // infinity norm
  double sufficient_decrease = 1e-4;
  double curvature = 0.9;
  int history = 10;               // L-BFGS memory
  int max_line_search_evals = 25;
  std::optional<std::uint64_t> restart_seed;  // seeded random restarts, off by default
  int restarts = 0;

  void validate() const;
};

/// Returns f(x) and writes the gradient. Non-finite values at trial points
/// make the line search back off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Limited-memory BFGS with a strong-Wolfe line search. The returned point is
/// the best one evaluated, so f <= f(x0) always holds.
MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                        const OptimizeOptions& opts = {});

}  // namespace gpmkl
