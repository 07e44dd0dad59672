#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gpmkl/datagen.hpp"
#include "gpmkl/error.hpp"
#include "gpmkl/optimize.hpp"
#include "gpmkl/regression.hpp"
#include "gpmkl/train.hpp"
#include "oracles.hpp"

using namespace gpmkl;
using namespace gpmkl::testing;

TEST(Minimize, ConvexQuadratic) {
  const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  const auto r = minimize(f, Eigen::Vector2d(3, 4));
  EXPECT_LT(r.f, 1e-10);
  EXPECT_LT(r.x.norm(), 1e-5);
  EXPECT_TRUE(r.converged);
}

TEST(Minimize, Rosenbrock) {
  const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  OptimizeOptions opts;
  opts.grad_tol = 1e-9;
  const auto r = minimize(f, Eigen::Vector2d(-1.2, 1), opts);
  EXPECT_LT(r.f, 1e-8);
  EXPECT_LE(r.iterations, 100);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(Minimize, NonFiniteRegionIsAvoided) {
  // log barrier: infinite for x <= 0, minimum at x = 1.
  const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    if (x[0] <= 0) {
      g[0] = 0;
      return std::numeric_limits<double>::infinity();
    }
    g[0] = 1 - 1 / x[0];
    return x[0] - std::log(x[0]);
  };
  const auto r = minimize(f, Eigen::VectorXd::Constant(1, 20.0));
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(Minimize, Errors) {
  const Objective nan = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = x;
    return std::numeric_limits<double>::quiet_NaN();
  };
  EXPECT_THROW(minimize(nan, Eigen::Vector2d(1, 1)), NumericalError);
  OptimizeOptions bad;
  bad.curvature = 1e-5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Minimize, WrongGradientFlagsLineSearch) {
  // Gradient points uphill, so no step can satisfy sufficient decrease.
  const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = -2.0 * x;
    return x.squaredNorm();
  };
  const auto r = minimize(f, Eigen::Vector2d(1, 1));
  EXPECT_TRUE(r.line_search_failed);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.f, 2.0);
}

TEST(Train, RegressionBeatsGeneratingHyperparameters) {
  const KernelSpec spec{KernelKind::SquaredExponential, chunk_layout(4, 2)};
  HyperParams truth = HyperParams::zeros(spec, true);
  truth.log_sigma_f << 0.3, -0.4;
  truth.log_ell << 0.2, 0.5;
  truth.log_sigma_n = std::log(0.2);
  truth.mean_const = 0.5;
  const Eigen::MatrixXd X = random_matrix(30, 4, 8);
  Eigen::MatrixXd C = gram(X, spec, truth);
  C.diagonal().array() += std::exp(2 * *truth.log_sigma_n);
  const Eigen::VectorXd y =
      (C.llt().matrixL() * random_matrix(30, 1, 9).col(0)).array() + truth.mean_const;
  const TrainedModel m = train(X, y, spec, default_hyperparams(X, y, spec, Task::Regression), Task::Regression);
  EXPECT_GE(m.lml, log_marginal_likelihood(X, y, spec, truth).value - 1e-6);
  EXPECT_FALSE(m.fallback_triggered);
  EXPECT_EQ(m.inference_used, InferenceMethod::Exact);
}

TEST(Train, SeparableToyIsFitPerfectly) {
  const KernelSpec spec{KernelKind::Linear, single_layout(2)};
  const Eigen::MatrixXd X = random_matrix(20, 2, 12);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y[i] = X(i, 0) - 0.5 * X(i, 1) > 0 ? 1.0 : -1.0;
  for (auto method : {InferenceMethod::EP, InferenceMethod::Laplace}) {
    TrainOptions opts;
    opts.inference = method;
    const TrainedModel m =
        train(X, y, spec, default_hyperparams(X, y, spec, Task::BinaryClassification), Task::BinaryClassification, opts);
    EXPECT_EQ(m.inference_used, method);
    EXPECT_FALSE(m.fallback_triggered);
    for (int i = 0; i < 20; ++i) {
      const double p = predict_value(m, X.row(i).transpose());
      EXPECT_EQ(p >= 0.5, y[i] > 0) << "point " << i;
    }
  }
}

TEST(Train, InformativeBagGetsLargestAmplitude) {
  SyntheticConfig cfg;
  cfg.dims = {4, 4, 5};
  cfg.layout = "slices";
  cfg.informative_bags = {2};
  cfg.effect_size = 1.0;
  cfg.n_per_class = 25;
  cfg.seed = 4;
  const Dataset data = generate_synthetic(cfg);
  const KernelSpec spec{KernelKind::SquaredExponential, slice_layout(cfg.dims)};
  const Eigen::VectorXd y = one_vs_rest_targets(data.labels, 1);
  const TrainedModel m = train(data.X, y, spec, default_hyperparams(data.X, y, spec, Task::BinaryClassification),
                               Task::BinaryClassification);
  for (Eigen::Index s = 0; s < 5; ++s) {
    if (s != 2) {
      EXPECT_GT(m.hp.log_sigma_f[2], m.hp.log_sigma_f[s]) << "bag " << s;
    }
  }
}

TEST(Train, Deterministic) {
  const KernelSpec spec{KernelKind::NeuralNetwork, chunk_layout(6, 2)};
  const Eigen::MatrixXd X = random_matrix(16, 6, 2);
  Eigen::VectorXd y(16);
  for (int i = 0; i < 16; ++i) y[i] = X(i, 3) > 0 ? 1.0 : -1.0;
  const HyperParams init = default_hyperparams(X, y, spec, Task::BinaryClassification);
  const TrainedModel a = train(X, y, spec, init, Task::BinaryClassification);
  const TrainedModel b = train(X, y, spec, init, Task::BinaryClassification);
  EXPECT_EQ(a.hp.to_vector(), b.hp.to_vector());
  EXPECT_EQ(a.lml, b.lml);
  EXPECT_EQ(std::get<LatentPosterior>(a.posterior).state.pred_weights,
            std::get<LatentPosterior>(b.posterior).state.pred_weights);
}

TEST(Train, EpFailureFallsBackToLaplace) {
  const KernelSpec spec{KernelKind::SquaredExponential, chunk_layout(4, 2)};
  Eigen::MatrixXd X = random_matrix(20, 4, 1);
  Eigen::VectorXd y(20);
  for (Eigen::Index i = 0; i < 20; ++i) y[i] = (i % 2) ? 1.0 : -1.0;
  for (Eigen::Index i = 1; i < 20; i += 2) X.row(i) = X.row(i - 1);
  HyperParams init = HyperParams::zeros(spec, false);
  init.log_sigma_f.setConstant(15.0);
  const TrainedModel m = train(X, y, spec, init, Task::BinaryClassification);
  EXPECT_TRUE(m.fallback_triggered);
  EXPECT_EQ(m.inference_used, InferenceMethod::Laplace);
  EXPECT_TRUE(std::isfinite(m.lml));
}

TEST(Train, RejectsMismatchedInputs) {
  const KernelSpec spec{KernelKind::Linear, single_layout(2)};
  const Eigen::MatrixXd X = random_matrix(4, 2, 1);
  const HyperParams cls = HyperParams::zeros(spec, false);
  EXPECT_THROW(train(X, Eigen::VectorXd::Ones(3), spec, cls, Task::BinaryClassification), std::invalid_argument);
  EXPECT_THROW(train(X, Eigen::VectorXd::Ones(4), spec, cls, Task::Regression), std::invalid_argument);
  TrainOptions exact;
  exact.inference = InferenceMethod::Exact;
  EXPECT_THROW(train(X, Eigen::VectorXd::Ones(4), spec, cls, Task::BinaryClassification, exact),
               std::invalid_argument);
}
