#include "gpmkl/classification.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gpmkl/error.hpp"
#include "gpmkl/quadrature.hpp"

namespace gpmkl {

std::string to_string(InferenceMethod method) {
  switch (method) {
    case InferenceMethod::Exact: return "exact";
    case InferenceMethod::EP: return "ep";
    case InferenceMethod::Laplace: return "la";
  }
  return "ep";
}

InferenceMethod parse_inference(const std::string& text) {
  if (text == "exact") return InferenceMethod::Exact;
  if (text == "ep") return InferenceMethod::EP;
  if (text == "la") return InferenceMethod::Laplace;
  throw std::invalid_argument("unknown inference method '" + text + "'");
}

namespace {

void check_labels(const PairwiseStats& stats, const Eigen::VectorXd& y) {
  if (!stats.symmetric()) throw std::invalid_argument("classification needs training-set statistics");
  if (y.size() != stats.rows() || y.size() == 0) throw std::invalid_argument("label count does not match inputs");
  for (double v : y) {
    if (v != 1.0 && v != -1.0) throw std::invalid_argument("labels must be -1 or +1");
  }
}

// B = I + diag(s) K diag(s)
JitteredCholesky factor_b(const Eigen::MatrixXd& K, const Eigen::VectorXd& s) {
  Eigen::MatrixXd B = s.asDiagonal() * K * s.asDiagonal();
  B.diagonal().array() += 1.0;
  return jittered_cholesky(B);
}

// diag(s) B^{-1} diag(s)
Eigen::MatrixXd sandwich_inverse(const JitteredCholesky& chol, const Eigen::VectorXd& s) {
  return s.asDiagonal() * chol.inverse() * s.asDiagonal();
}

struct LogisticTerms {
  Eigen::VectorXd grad;  // d log p / df
  Eigen::VectorXd w;     // -d^2 log p / df^2
  Eigen::VectorXd pi;    // sigmoid(f)
  double log_lik = 0.0;
};

LogisticTerms logistic_terms(const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  LogisticTerms t;
  const auto n = f.size();
  t.grad.resize(n);
  t.w.resize(n);
  t.pi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = sigmoid(f[i]);
    t.pi[i] = p;
    t.grad[i] = 0.5 * (y[i] + 1.0) - p;
    t.w[i] = p * (1.0 - p);
    t.log_lik += log_sigmoid(y[i] * f[i]);
  }
  return t;
}

double laplace_objective(const Eigen::VectorXd& a, const Eigen::VectorXd& f, double m,
                         const Eigen::VectorXd& y) {
  return -0.5 * a.dot((f.array() - m).matrix()) + logistic_terms(f, y).log_lik;
}

}  // namespace

LatentState laplace_state(const PairwiseStats& stats, const Eigen::VectorXd& y, const HyperParams& hp,
                          const ClassificationOptions& opts, bool with_gradient) {
  check_labels(stats, y);
  const Eigen::MatrixXd K = stats.covariance(hp);
  const double m = hp.mean_const;
  const auto n = y.size();

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, m);
  double psi = laplace_objective(a, f, m, y);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.newton_max_iters; ++it) {
    const LogisticTerms t = logistic_terms(f, y);
    residual = (t.grad - a).lpNorm<Eigen::Infinity>();
    if (residual < opts.newton_tolerance) break;

    const Eigen::VectorXd sw = t.w.cwiseSqrt();
    const JitteredCholesky chol = factor_b(K, sw);
    const Eigen::VectorXd b = t.w.cwiseProduct(f.array().matrix() - Eigen::VectorXd::Constant(n, m)) + t.grad;
    const Eigen::VectorXd a_newton = b - sw.cwiseProduct(chol.solve(Eigen::VectorXd(sw.cwiseProduct(K * b))));

    // Newton on a log-concave objective; halve the step if it fails to improve.
    Eigen::VectorXd step = a_newton - a;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Eigen::VectorXd a_try = a + step;
      const Eigen::VectorXd f_try = (K * a_try).array() + m;
      const double psi_try = laplace_objective(a_try, f_try, m, y);
      if (std::isfinite(psi_try) && psi_try >= psi - 1e-12 * (1.0 + std::abs(psi))) {
        a = a_try;
        f = f_try;
        psi = psi_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  if (!(residual < opts.newton_tolerance)) {
    residual = (logistic_terms(f, y).grad - a).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-6)) {
      throw ConvergenceFailure("Laplace Newton iterations did not reach the posterior mode (residual " +
                               std::to_string(residual) + ")");
    }
  }

  const LogisticTerms t = logistic_terms(f, y);
  LatentState state;
  state.method = InferenceMethod::Laplace;
  state.iterations = it;
  state.f_hat = f;
  state.prior_weights = a;
  state.pred_weights = t.grad;
  state.sqrt_precision = t.w.cwiseSqrt();
  state.chol_b = factor_b(K, state.sqrt_precision);
  state.approx_lml = -0.5 * a.dot((f.array() - m).matrix()) + t.log_lik - 0.5 * state.chol_b.log_determinant();
  if (!std::isfinite(state.approx_lml)) throw NumericalError("Laplace marginal likelihood is not finite");

  if (with_gradient) {
    const Eigen::VectorXd& sw = state.sqrt_precision;
    const Eigen::MatrixXd R = sandwich_inverse(state.chol_b, sw);
    const Eigen::MatrixXd C = state.chol_b.solve_lower(sw.asDiagonal() * K);
    // d lml / d f_hat = 1/2 diag((K^-1 + W)^-1) d^3 log p, with d^3 log p = -w (1 - 2 pi).
    const Eigen::VectorXd s2 = -0.5 * (K.diagonal() - C.colwise().squaredNorm().transpose())
                                         .cwiseProduct(t.w)
                                         .cwiseProduct((1.0 - 2.0 * t.pi.array()).matrix());
    state.lml_gradient.resize(static_cast<Eigen::Index>(hp.size()));
    const std::size_t kernel_params = hp.size() - 1;
    for (std::size_t k = 0; k < kernel_params; ++k) {
      const Eigen::MatrixXd dK = stats.covariance_gradient(hp, k);
      const double explicit_part = 0.5 * a.dot(dK * a) - 0.5 * R.cwiseProduct(dK).sum();
      const Eigen::VectorXd b = dK * t.grad;
      const Eigen::VectorXd s3 = b - K * (R * b);
      state.lml_gradient[static_cast<Eigen::Index>(k)] = explicit_part + s2.dot(s3);
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    state.lml_gradient[static_cast<Eigen::Index>(hp.mean_index())] =
        a.sum() + s2.dot(ones - K * (R * ones));
  }
  return state;
}

double stationarity_residual(const LatentState& state, const Eigen::VectorXd& y) {
  return (logistic_terms(state.f_hat, y).grad - state.prior_weights).lpNorm<Eigen::Infinity>();
}

namespace {

struct EpMoments {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mu;
  JitteredCholesky chol;
};

EpMoments ep_posterior(const Eigen::MatrixXd& K, const Eigen::VectorXd& tau, const Eigen::VectorXd& nu) {
  const Eigen::VectorXd sw = tau.cwiseSqrt();
  EpMoments out{{}, {}, factor_b(K, sw)};
  const Eigen::MatrixXd V = out.chol.solve_lower(sw.asDiagonal() * K);
  out.sigma = K - V.transpose() * V;
  // Sigma_ii is a difference of two terms of size K_ii; below this ratio it
  // carries no correct digits.
  constexpr double kCancellationFloor = 1e3 * std::numeric_limits<double>::epsilon();
  if ((out.sigma.diagonal().array() < kCancellationFloor * K.diagonal().array()).any()) {
    throw NumericalError("posterior covariance lost precision to cancellation");
  }
  out.mu = out.sigma * nu;
  return out;
}

[[noreturn]] void ep_failure(const std::string& why) { throw ConvergenceFailure("EP failed: " + why); }

}  // namespace

LatentState ep_state(const PairwiseStats& stats, const Eigen::VectorXd& y, const HyperParams& hp,
                     const ClassificationOptions& opts, bool with_gradient, const SiteParams* warm_start) {
  check_labels(stats, y);
  const Eigen::MatrixXd K = stats.covariance(hp);
  const double m = hp.mean_const;
  const auto n = y.size();

  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(n);
  if (warm_start && warm_start->tau.size() == n && warm_start->nu.size() == n) {
    tau = warm_start->tau;
    nu = warm_start->nu;
  }

  EpMoments post;
  try {
    post = ep_posterior(K, tau, nu);
  } catch (const NumericalError& e) {
    ep_failure(e.what());
  }

  const Eigen::ArrayXd prior_var = K.diagonal().array();
  const double damping = opts.ep_damping;
  int sweep = 0;
  bool converged = false;
  for (; sweep < opts.ep_max_sweeps && !converged; ++sweep) {
    const Eigen::VectorXd tau_old = tau, nu_old = nu;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sii = post.sigma(i, i);
      const double tau_cav = 1.0 / sii - tau[i];
      const double nu_cav = post.mu[i] / sii - nu[i];
      if (!(tau_cav > 0.0) || !std::isfinite(tau_cav) || !std::isfinite(nu_cav)) {
        ep_failure("non-positive cavity precision at site " + std::to_string(i));
      }
      const double cav_mean = nu_cav / tau_cav;
      const TiltedMoments tilted = logistic_tilted_moments(y[i], cav_mean + m, 1.0 / tau_cav);
      if (!(tilted.var > 0.0)) ep_failure("degenerate tilted variance at site " + std::to_string(i));
      const double tau_target = std::max(1.0 / tilted.var - tau_cav, 0.0);
      const double nu_target = (tilted.mean - m) / tilted.var - nu_cav;

      const double tau_new = tau[i] + damping * (tau_target - tau[i]);
      const double nu_new = nu[i] + damping * (nu_target - nu[i]);
      const double dtau = tau_new - tau[i];
      const double dnu = nu_new - nu[i];
      tau[i] = tau_new;
      nu[i] = nu_new;

      const double denom = 1.0 + dtau * sii;
      if (!(denom > 0.0) || !std::isfinite(denom)) ep_failure("rank-one update lost positivity");
      const Eigen::VectorXd col = post.sigma.col(i);
      const double mu_i = post.mu[i];
      post.sigma.noalias() -= (dtau / denom) * col * col.transpose();
      post.mu += ((dnu - dtau * mu_i) / denom) * col;
    }
    try {
      post = ep_posterior(K, tau, nu);
    } catch (const NumericalError& e) {
      ep_failure(e.what());
    }
    if (!post.sigma.allFinite() || !post.mu.allFinite()) ep_failure("non-finite posterior moments");
    // Changes measured in units of the prior scale, so the test does not
    // depend on the kernel amplitude.
    const double change =
        std::max(((tau - tau_old).array().abs() * prior_var).maxCoeff(),
                 ((nu - nu_old).array().abs() * prior_var.sqrt()).maxCoeff());
    converged = change < opts.ep_tolerance;
  }
  if (!converged) ep_failure("no convergence within " + std::to_string(opts.ep_max_sweeps) + " sweeps");

  // Approximate log marginal likelihood from cavity and site parameters.
  const Eigen::VectorXd sdiag = post.sigma.diagonal();
  const Eigen::VectorXd tau_cav = sdiag.cwiseInverse() - tau;
  const Eigen::VectorXd nu_cav = post.mu.cwiseQuotient(sdiag) - nu;
  if (!(tau_cav.array() > 0.0).all()) ep_failure("non-positive cavity precision at the fixed point");

  double sum_log_z = 0.0;
  SiteParams sites;
  sites.tau = tau;
  sites.nu = nu;
  sites.log_z_tilde.resize(n);
  sites.mu_tilde.resize(n);
  sites.sigma2_tilde.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double cav_var = 1.0 / tau_cav[i];
    const double cav_mean = nu_cav[i] / tau_cav[i];
    const double lz = logistic_tilted_moments(y[i], cav_mean + m, cav_var).log_z;
    sum_log_z += lz;
    if (tau[i] > 0.0) {
      const double s2 = 1.0 / tau[i];
      const double mt = nu[i] / tau[i];
      sites.sigma2_tilde[i] = s2;
      sites.mu_tilde[i] = mt + m;
      sites.log_z_tilde[i] = lz + 0.5 * std::log(2.0 * std::numbers::pi * (cav_var + s2)) +
                             0.5 * (cav_mean - mt) * (cav_mean - mt) / (cav_var + s2);
    } else {
      sites.sigma2_tilde[i] = std::numeric_limits<double>::infinity();
      sites.mu_tilde[i] = m;
      sites.log_z_tilde[i] = lz;
    }
  }

  const Eigen::ArrayXd tt = tau.array(), tn = tau_cav.array(), vt = nu.array(), vn = nu_cav.array();
  const double log_det_half = 0.5 * post.chol.log_determinant();
  const double nlz = log_det_half - sum_log_z - 0.5 * nu.dot(post.sigma * nu) -
                     0.5 * (vn * (tt / tn * vn - 2.0 * vt) / (tt + tn)).sum() +
                     0.5 * (vt.square() / (tn + tt)).sum() - 0.5 * (tt / tn).log1p().sum();

  LatentState state;
  state.method = InferenceMethod::EP;
  state.iterations = sweep;
  state.f_hat = post.mu.array() + m;
  state.sqrt_precision = tau.cwiseSqrt();
  state.chol_b = std::move(post.chol);
  state.pred_weights =
      nu - state.sqrt_precision.cwiseProduct(
               state.chol_b.solve(Eigen::VectorXd(state.sqrt_precision.cwiseProduct(K * nu))));
  state.prior_weights = state.pred_weights;
  state.approx_lml = -nlz;
  state.sites = std::move(sites);
  if (!std::isfinite(state.approx_lml)) ep_failure("non-finite marginal likelihood");

  if (with_gradient) {
    // Sites held at the fixed point: d lml = 1/2 tr((alpha alpha^T - R) dK).
    const Eigen::VectorXd& alpha = state.pred_weights;
    const Eigen::MatrixXd F = alpha * alpha.transpose() - sandwich_inverse(state.chol_b, state.sqrt_precision);
    state.lml_gradient.resize(static_cast<Eigen::Index>(hp.size()));
    const std::size_t kernel_params = hp.size() - 1;
    for (std::size_t k = 0; k < kernel_params; ++k) {
      state.lml_gradient[static_cast<Eigen::Index>(k)] = 0.5 * F.cwiseProduct(stats.covariance_gradient(hp, k)).sum();
    }
    state.lml_gradient[static_cast<Eigen::Index>(hp.mean_index())] = alpha.sum();
  }
  return state;
}

namespace {

void check_classifier_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                             const HyperParams& hp) {
  if (X.rows() == 0) throw std::invalid_argument("classification needs at least one observation");
  if (y.size() != X.rows()) throw std::invalid_argument("label count does not match inputs");
  hp.validate(spec);
  if (hp.log_sigma_n) throw std::invalid_argument("classification hyperparameters carry no noise term");
}

}  // namespace

LatentPosterior laplace_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                            const HyperParams& hp, const ClassificationOptions& opts) {
  check_classifier_inputs(X, y, spec, hp);
  LatentState state = laplace_state(PairwiseStats(X, spec), y, hp, opts);
  return {spec, hp, X, y, std::move(state)};
}

LatentPosterior ep_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                       const HyperParams& hp, const ClassificationOptions& opts) {
  check_classifier_inputs(X, y, spec, hp);
  LatentState state = ep_state(PairwiseStats(X, spec), y, hp, opts);
  return {spec, hp, X, y, std::move(state)};
}

LatentPosterior restore_latent(Eigen::MatrixXd X, Eigen::VectorXd y, const KernelSpec& spec,
                               const HyperParams& hp, InferenceMethod method, Eigen::VectorXd pred_weights,
                               Eigen::VectorXd sqrt_precision, double approx_lml) {
  check_classifier_inputs(X, y, spec, hp);
  if (pred_weights.size() != X.rows() || sqrt_precision.size() != X.rows()) {
    throw std::invalid_argument("posterior vectors do not match the training set");
  }
  LatentState state;
  state.method = method;
  state.chol_b = factor_b(PairwiseStats(X, spec).covariance(hp), sqrt_precision);
  state.pred_weights = std::move(pred_weights);
  state.sqrt_precision = std::move(sqrt_precision);
  state.approx_lml = approx_lml;
  return {spec, hp, std::move(X), std::move(y), std::move(state)};
}

PredictiveClass predict_proba(const LatentPosterior& post, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != post.spec.layout.dim()) {
    throw std::invalid_argument("test input length does not match the model");
  }
  const Eigen::MatrixXd xs = x.transpose();
  const Eigen::VectorXd k_star = PairwiseStats(post.X, xs, post.spec).covariance(post.hp).col(0);
  const double prior = self_covariance(xs, post.spec, post.hp)[0];
  const LatentState& st = post.state;

  PredictiveClass out;
  out.latent_mean = post.hp.mean_const + k_star.dot(st.pred_weights);
  const Eigen::VectorXd v = st.chol_b.solve_lower(st.sqrt_precision.cwiseProduct(k_star));
  out.latent_var = std::max(prior - v.squaredNorm(), 0.0);
  out.probability = averaged_sigmoid(out.latent_mean, out.latent_var);
  return out;
}

}  // namespace gpmkl
