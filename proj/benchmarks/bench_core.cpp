#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "gpmkl/classification.hpp"
#include "gpmkl/kernels.hpp"
#include "gpmkl/quadrature.hpp"
#include "gpmkl/regression.hpp"
#include "gpmkl/subspaces.hpp"

namespace {

using namespace gpmkl;

Eigen::MatrixXd random_inputs(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
  return X;
}

Eigen::VectorXd labels_of(const Eigen::MatrixXd& X) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = X.row(i).head(8).sum() > 0 ? 1.0 : -1.0;
  return y;
}

// 24^3 volume in 27 cubes of edge 8.
const VolumeDims kDims{24, 24, 24};

HyperParams cube_hp(const KernelSpec& spec, bool noise) {
  HyperParams hp = HyperParams::zeros(spec, noise);
  hp.log_ell.setConstant(0.5 * std::log(2.0 * 512));
  return hp;
}

void BM_PairwiseStats(benchmark::State& state) {
  const KernelSpec spec{KernelKind::SquaredExponential, cube_layout(kDims, 8)};
  const Eigen::MatrixXd X = random_inputs(state.range(0), 13824, 1);
  for (auto _ : state) benchmark::DoNotOptimize(PairwiseStats(X, spec));
}
BENCHMARK(BM_PairwiseStats)->Arg(45)->Arg(180)->Unit(benchmark::kMillisecond);

void BM_Covariance(benchmark::State& state) {
  const KernelSpec spec{KernelKind::SquaredExponential, cube_layout(kDims, 8)};
  const PairwiseStats stats(random_inputs(state.range(0), 13824, 2), spec);
  const HyperParams hp = cube_hp(spec, false);
  for (auto _ : state) benchmark::DoNotOptimize(stats.covariance(hp));
}
BENCHMARK(BM_Covariance)->Arg(180)->Unit(benchmark::kMicrosecond);

void BM_RegressionLml(benchmark::State& state) {
  const KernelSpec spec{KernelKind::SquaredExponential, cube_layout(kDims, 8)};
  const Eigen::MatrixXd X = random_inputs(state.range(0), 13824, 3);
  const PairwiseStats stats(X, spec);
  const Eigen::VectorXd y = X.col(0);
  const HyperParams hp = cube_hp(spec, true);
  for (auto _ : state) benchmark::DoNotOptimize(log_marginal_likelihood(stats, y, hp));
}
BENCHMARK(BM_RegressionLml)->Arg(180)->Unit(benchmark::kMillisecond);

void BM_LaplaceState(benchmark::State& state) {
  const KernelSpec spec{KernelKind::SquaredExponential, cube_layout(kDims, 8)};
  const Eigen::MatrixXd X = random_inputs(state.range(0), 13824, 4);
  const PairwiseStats stats(X, spec);
  const Eigen::VectorXd y = labels_of(X);
  const HyperParams hp = cube_hp(spec, false);
  for (auto _ : state) benchmark::DoNotOptimize(laplace_state(stats, y, hp));
}
BENCHMARK(BM_LaplaceState)->Arg(180)->Unit(benchmark::kMillisecond);

void BM_EpState(benchmark::State& state) {
  const KernelSpec spec{KernelKind::SquaredExponential, cube_layout(kDims, 8)};
  const Eigen::MatrixXd X = random_inputs(state.range(0), 13824, 5);
  const PairwiseStats stats(X, spec);
  const Eigen::VectorXd y = labels_of(X);
  const HyperParams hp = cube_hp(spec, false);
  for (auto _ : state) benchmark::DoNotOptimize(ep_state(stats, y, hp));
}
BENCHMARK(BM_EpState)->Arg(180)->Unit(benchmark::kMillisecond);

void BM_TiltedMoments(benchmark::State& state) {
  const double var = static_cast<double>(state.range(0));
  double m = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(logistic_tilted_moments(1.0, m, var));
    m = m > 2.0 ? -2.0 : m + 0.01;
  }
}
BENCHMARK(BM_TiltedMoments)->Arg(1)->Arg(100)->Arg(1000000);

void BM_CubeLayout(benchmark::State& state) {
  const VolumeDims dims{79, 95, 68};
  for (auto _ : state) benchmark::DoNotOptimize(cube_layout(dims, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_CubeLayout)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
