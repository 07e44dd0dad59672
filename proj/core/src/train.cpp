#include "gpmkl/train.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "gpmkl/error.hpp"

namespace gpmkl {

std::string to_string(Task task) {
  return task == Task::Regression ? "regression" : "classification";
}

const Eigen::MatrixXd& TrainedModel::inputs() const {
  return std::visit([](const auto& post) -> const Eigen::MatrixXd& { return post.X; }, posterior);
}

HyperParams default_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const KernelSpec& spec, Task task) {
  HyperParams hp = HyperParams::zeros(spec, task == Task::Regression);
  if (has_bandwidth(spec.kind)) hp.log_ell = median_bag_distances(X, spec.layout).array().log().matrix();
  if (task == Task::Regression) {
    hp.log_sigma_n = std::log(0.1);
    hp.mean_const = y.size() > 0 ? y.mean() : 0.0;
  }
  return hp;
}

namespace {

// Thrown out of the objective to abandon an EP run in favour of Laplace.
struct EpAbandoned {
  std::string reason;
};

struct RunResult {
  HyperParams hp;
  MinimizeResult opt;
};

RunResult optimize_once(const PairwiseStats& stats, const Eigen::VectorXd& y, const HyperParams& init_hp,
                        Task task, InferenceMethod method, const TrainOptions& opts) {
  HyperParams work = init_hp;
  std::optional<SiteParams> warm;
  bool first = true;

  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) -> double {
    const bool at_start = first;
    first = false;
    work.assign(theta);
    try {
      if (task == Task::Regression) {
        const LmlResult r = log_marginal_likelihood(stats, y, work);
        grad = -r.gradient;
        return -r.value;
      }
      if (method == InferenceMethod::Laplace) {
        const LatentState st = laplace_state(stats, y, work, opts.inference_options);
        grad = -st.lml_gradient;
        return -st.approx_lml;
      }
      LatentState st;
      try {
        st = ep_state(stats, y, work, opts.inference_options, true, warm ? &*warm : nullptr);
      } catch (const ConvergenceFailure&) {
        if (!warm) throw;
        st = ep_state(stats, y, work, opts.inference_options, true, nullptr);
      }
      warm = st.sites;
      grad = -st.lml_gradient;
      return -st.approx_lml;
    } catch (const ConvergenceFailure& e) {
      if (method == InferenceMethod::EP && at_start) throw EpAbandoned{e.what()};
      if (at_start) throw;
    } catch (const NumericalError&) {
      if (at_start) throw;
    }
    // A failing trial point makes the line search back off.
    return std::numeric_limits<double>::infinity();
  };

  RunResult best{init_hp, minimize(objective, init_hp.to_vector(), opts.optimizer)};
  if (opts.optimizer.restart_seed && opts.optimizer.restarts > 0) {
    std::mt19937_64 rng(*opts.optimizer.restart_seed);
    std::normal_distribution<double> jitter(0.0, 0.5);
    for (int r = 0; r < opts.optimizer.restarts; ++r) {
      Eigen::VectorXd x0 = init_hp.to_vector();
      for (auto& v : x0) v += jitter(rng);
      first = true;
      warm.reset();
      try {
        MinimizeResult candidate = minimize(objective, x0, opts.optimizer);
        if (candidate.f < best.opt.f) best.opt = std::move(candidate);
      } catch (const NumericalError&) {
      } catch (const EpAbandoned&) {
      }
    }
  }
  best.hp.assign(best.opt.x);
  return best;
}

}  // namespace

TrainedModel train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& spec,
                   const HyperParams& init_hp, Task task, const TrainOptions& opts) {
  if (X.rows() == 0 || y.size() != X.rows()) throw std::invalid_argument("inputs and targets differ in count");
  init_hp.validate(spec);
  if ((task == Task::Regression) != init_hp.log_sigma_n.has_value()) {
    throw std::invalid_argument("noise hyperparameter must be present exactly for regression");
  }
  const PairwiseStats stats(X, spec);

  TrainedModel model;
  model.task = task;
  model.spec = spec;

  if (task == Task::Regression) {
    const RunResult run = optimize_once(stats, y, init_hp, task, InferenceMethod::Exact, opts);
    model.hp = run.hp;
    model.iterations = run.opt.iterations;
    model.inference_used = InferenceMethod::Exact;
    model.posterior = fit_exact(X, y, spec, model.hp);
    model.lml = log_marginal_likelihood(stats, y, model.hp).value;
    return model;
  }

  if (opts.inference == InferenceMethod::Exact) {
    throw std::invalid_argument("classification needs EP or Laplace inference");
  }
  if (opts.inference == InferenceMethod::EP) {
    try {
      const RunResult run = optimize_once(stats, y, init_hp, task, InferenceMethod::EP, opts);
      LatentState state = ep_state(stats, y, run.hp, opts.inference_options, false);
      model.hp = run.hp;
      model.iterations = run.opt.iterations;
      model.lml = state.approx_lml;
      model.inference_used = InferenceMethod::EP;
      model.posterior = LatentPosterior{spec, run.hp, X, y, std::move(state)};
      return model;
    } catch (const EpAbandoned&) {
    } catch (const ConvergenceFailure&) {
    }
    model.fallback_triggered = true;
  }

  try {
    const RunResult run = optimize_once(stats, y, init_hp, task, InferenceMethod::Laplace, opts);
    LatentState state = laplace_state(stats, y, run.hp, opts.inference_options, false);
    model.hp = run.hp;
    model.iterations = run.opt.iterations;
    model.lml = state.approx_lml;
    model.inference_used = InferenceMethod::Laplace;
    model.posterior = LatentPosterior{spec, run.hp, X, y, std::move(state)};
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(model.fallback_triggered ? "EP and Laplace both failed: "
                                                              : "Laplace training failed: ") + e.what());
  }
  return model;
}

double predict_value(const TrainedModel& model, const Eigen::VectorXd& x) {
  if (const auto* reg = std::get_if<RegressionPosterior>(&model.posterior)) {
    return predict_regression(*reg, x).mean;
  }
  return predict_proba(std::get<LatentPosterior>(model.posterior), x).probability;
}

}  // namespace gpmkl
