#include "gpmkl/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "gpmkl/error.hpp"

namespace gpmkl {

void OptimizeOptions::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < curvature && curvature < 1.0)) {
    throw std::invalid_argument("line-search constants need 0 < c1 < c2 < 1");
  }
  if (history < 1 || max_line_search_evals < 2) throw std::invalid_argument("bad L-BFGS settings");
}

namespace {

struct Point {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

class Evaluator {
 public:
  Evaluator(const Objective& objective, const Eigen::VectorXd& origin, const Eigen::VectorXd& dir, int& counter)
      : objective_(objective), origin_(origin), dir_(dir), counter_(counter) {}

  Point at(double step) const {
    Point p;
    p.step = step;
    p.x = origin_ + step * dir_;
    p.grad = Eigen::VectorXd::Zero(origin_.size());
    ++counter_;
    p.f = objective_(p.x, p.grad);
    if (!std::isfinite(p.f) || !p.grad.allFinite()) {
      p.f = std::numeric_limits<double>::infinity();
      p.slope = std::numeric_limits<double>::quiet_NaN();
    } else {
      p.slope = p.grad.dot(dir_);
    }
    return p;
  }

 private:
  const Objective& objective_;
  const Eigen::VectorXd& origin_;
  const Eigen::VectorXd& dir_;
  int& counter_;
};

// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), safeguarded into
// the interior of [a, b].
double cubic_step(const Point& a, const Point& b) {
  const double lo = std::min(a.step, b.step), hi = std::max(a.step, b.step);
  const double fallback = 0.5 * (a.step + b.step);
  if (!std::isfinite(b.f) || !std::isfinite(b.slope)) return a.step + 0.25 * (b.step - a.step);
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.step - b.step);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (disc < 0.0) return fallback;
  const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
  const double t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) return fallback;
  return t;
}

struct LineSearchResult {
  Point best;
  bool wolfe = false;
};

LineSearchResult strong_wolfe(const Evaluator& eval, const Point& start, double initial_step,
                              const OptimizeOptions& opts) {
  const double c1 = opts.sufficient_decrease, c2 = opts.curvature;
  int budget = opts.max_line_search_evals;
  Point best = start;
  const auto track = [&](const Point& p) {
    if (p.f < best.f) best = p;
  };
  const auto armijo = [&](const Point& p) { return p.f <= start.f + c1 * p.step * start.slope; };
  const auto curvature_ok = [&](const Point& p) { return std::abs(p.slope) <= -c2 * start.slope; };

  const auto zoom = [&](Point lo, Point hi) -> LineSearchResult {
    while (budget-- > 0) {
      const Point p = eval.at(cubic_step(lo, hi));
      track(p);
      if (!armijo(p) || p.f >= lo.f) {
        hi = p;
      } else {
        if (curvature_ok(p)) return {p, true};
        if (p.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = p;
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
    }
    return {best, false};
  };

  Point prev = start;
  double step = initial_step;
  for (int i = 0; budget-- > 0; ++i) {
    const Point p = eval.at(step);
    track(p);
    if (!std::isfinite(p.f)) {
      // Back off toward the last finite point.
      return zoom(prev, p);
    }
    if (!armijo(p) || (i > 0 && p.f >= prev.f)) return zoom(prev, p);
    if (curvature_ok(p)) return {p, true};
    if (p.slope >= 0.0) return zoom(p, prev);
    prev = p;
    step *= 2.0;
  }
  return {best, false};
}

}  // namespace

MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& x0, const OptimizeOptions& opts) {
  opts.validate();
  MinimizeResult result;
  result.x = x0;
  result.grad = Eigen::VectorXd::Zero(x0.size());
  result.f = objective(result.x, result.grad);
  result.evaluations = 1;
  if (!std::isfinite(result.f) || !result.grad.allFinite()) {
    throw NumericalError("objective is not finite at the starting point");
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (result.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = result.grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(dir);
      dir += (alpha[k] - beta) * s_hist[k];
    }
    dir = -dir;
    double slope = dir.dot(result.grad);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -result.grad;
      slope = dir.dot(result.grad);
    }

    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / result.grad.lpNorm<Eigen::Infinity>()) : 1.0;
    Point start{0.0, result.f, slope, result.x, result.grad};
    const Evaluator eval(objective, result.x, dir, result.evaluations);
    const LineSearchResult ls = strong_wolfe(eval, start, initial_step, opts);
    result.iterations = iter + 1;

    if (!(ls.best.f < result.f)) {
      result.line_search_failed = true;
      break;
    }
    const Eigen::VectorXd s = ls.best.x - result.x;
    const Eigen::VectorXd y = ls.best.grad - result.grad;
    const double sy = s.dot(y);
    const double f_prev = result.f;
    result.x = ls.best.x;
    result.f = ls.best.f;
    result.grad = ls.best.grad;

    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (std::abs(f_prev - result.f) <= 1e-15 * std::max(1.0, std::abs(result.f)) &&
        result.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol * 1e3) {
      break;
    }
  }
  if (result.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) result.converged = true;
  return result;
}

}  // namespace gpmkl
