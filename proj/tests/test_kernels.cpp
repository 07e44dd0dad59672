#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gpmkl/kernels.hpp"
#include "oracles.hpp"

using namespace gpmkl;
using gpmkl::testing::chunk_layout;
using gpmkl::testing::random_matrix;

namespace {

std::span<const double> sp(const std::vector<double>& v) { return {v.data(), v.size()}; }

HyperParams random_hp(const KernelSpec& spec, bool noise, std::uint64_t seed) {
  HyperParams hp = HyperParams::zeros(spec, noise);
  const Eigen::MatrixXd r = random_matrix(static_cast<Eigen::Index>(hp.size()), 1, seed, 0.4);
  Eigen::VectorXd flat = r.col(0);
  for (std::size_t s = 0; s < spec.num_kernels() && has_bandwidth(spec.kind); ++s) {
    flat[static_cast<Eigen::Index>(hp.ell_index(s))] += 0.5 * std::log(static_cast<double>(spec.layout.bag(s).size()));
  }
  hp.assign(flat);
  return hp;
}

}  // namespace

TEST(KernelLin, Examples) {
  const std::vector<double> zero{0, 0}, a{1, 2}, b{3, 4};
  EXPECT_EQ(kernel_lin(sp(zero), sp(zero), 1.3), 0.0);
  EXPECT_DOUBLE_EQ(kernel_lin(sp(a), sp(b), 0.0), 11.0);
  EXPECT_NEAR(kernel_lin(sp(a), sp(b), std::log(2.0)), 44.0, 1e-12);
}

TEST(KernelSe, Examples) {
  const std::vector<double> a{0.3, -1.0}, b{1.3, 0.0}, far{100, -50};
  EXPECT_DOUBLE_EQ(kernel_se(sp(a), sp(a), 0.0, 0.0), 1.0);
  EXPECT_NEAR(kernel_se(sp(a), sp(b), 0.0, 0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel_se(sp(a), sp(far), 20.0, 0.0), 1.0, 1e-6);
}

TEST(KernelNn, Examples) {
  const std::vector<double> zero{0, 0, 0};
  EXPECT_NEAR(kernel_nn(sp(zero), sp(zero), 0.0, 0.0), std::asin(2.0 / 3.0), 1e-15);
  const std::vector<double> x{5.0, -7.0, 3.0};
  const double k = kernel_nn(sp(x), sp(x), -1.0, 0.7);
  EXPECT_LT(k, std::exp(1.4) * std::numbers::pi / 2);
}

TEST(Kernels, DimensionMismatchAndNonFinite) {
  const std::vector<double> a{1, 2}, b{1, 2, 3}, bad{1, NAN};
  EXPECT_THROW(kernel_lin(sp(a), sp(b), 0.0), std::invalid_argument);
  EXPECT_THROW(kernel_se(sp(a), sp(b), 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(kernel_nn(sp(a), sp(b), 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(kernel_lin(sp(a), sp(bad), 0.0), std::invalid_argument);
}

TEST(Kernels, ParseKind) {
  EXPECT_EQ(parse_kernel_kind("lin"), KernelKind::Linear);
  EXPECT_EQ(parse_kernel_kind("se"), KernelKind::SquaredExponential);
  EXPECT_EQ(parse_kernel_kind("nn"), KernelKind::NeuralNetwork);
  EXPECT_THROW(parse_kernel_kind("rbf"), std::invalid_argument);
}

TEST(CompositeKernel, TwoBagLinear) {
  const KernelSpec spec{KernelKind::Linear, chunk_layout(4, 2)};
  HyperParams hp = HyperParams::zeros(spec, false);
  const std::vector<double> xi{1, 2, 3, 4}, xj{1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(composite_kernel(sp(xi), sp(xj), spec, hp), 5.0);
}

TEST(CompositeKernel, SingleBagMatchesBaseKernel) {
  const std::vector<double> xi{0.1, -2, 3.5}, xj{1, 0.25, -1};
  for (auto kind : {KernelKind::Linear, KernelKind::SquaredExponential, KernelKind::NeuralNetwork}) {
    const KernelSpec spec{kind, single_layout(3)};
    HyperParams hp = HyperParams::zeros(spec, false);
    hp.log_sigma_f[0] = 0.3;
    if (has_bandwidth(kind)) hp.log_ell[0] = -0.2;
    double base = 0;
    switch (kind) {
      case KernelKind::Linear: base = kernel_lin(sp(xi), sp(xj), 0.3); break;
      case KernelKind::SquaredExponential: base = kernel_se(sp(xi), sp(xj), -0.2, 0.3); break;
      case KernelKind::NeuralNetwork: base = kernel_nn(sp(xi), sp(xj), -0.2, 0.3); break;
    }
    EXPECT_EQ(composite_kernel(sp(xi), sp(xj), spec, hp), base);
  }
}

TEST(CompositeKernel, PrunedBagVanishes) {
  const KernelSpec spec{KernelKind::SquaredExponential, chunk_layout(6, 3)};
  HyperParams hp = HyperParams::zeros(spec, false);
  hp.log_sigma_f[1] = -50.0;
  const Eigen::MatrixXd X = random_matrix(5, 6, 3);
  const PairwiseStats stats(X, spec);
  EXPECT_LT(stats.bag_covariance(hp, 1).cwiseAbs().maxCoeff(), 1e-40);
}

TEST(CompositeKernel, LayoutLengthMismatch) {
  const KernelSpec spec{KernelKind::Linear, chunk_layout(4, 2)};
  const HyperParams hp = HyperParams::zeros(spec, false);
  const std::vector<double> x3{1, 2, 3};
  EXPECT_THROW(composite_kernel(sp(x3), sp(x3), spec, hp), std::invalid_argument);
}

TEST(Gram, SymmetricPsdAndAdditive) {
  const Eigen::MatrixXd X = random_matrix(12, 30, 11);
  for (auto kind : {KernelKind::Linear, KernelKind::SquaredExponential, KernelKind::NeuralNetwork}) {
    const KernelSpec spec{kind, chunk_layout(30, 3)};
    const HyperParams hp = random_hp(spec, false, 5);
    const Eigen::MatrixXd K = gram(X, spec, hp);
    EXPECT_EQ((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0) << to_string(kind);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-10 * K.trace()) << to_string(kind);

    // Sum of separately built single-bag Grams.
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(12, 12);
    for (std::size_t s = 0; s < spec.num_kernels(); ++s) {
      const KernelSpec one{kind, single_layout(spec.layout.bag(s).size())};
      HyperParams h1 = HyperParams::zeros(one, false);
      h1.log_sigma_f[0] = hp.log_sigma_f[static_cast<Eigen::Index>(s)];
      if (has_bandwidth(kind)) h1.log_ell[0] = hp.log_ell[static_cast<Eigen::Index>(s)];
      sum += gram(extract_bag_columns(X, spec.layout, s), one, h1);
    }
    EXPECT_LE((K - sum).cwiseAbs().maxCoeff(), 1e-12) << to_string(kind);

    // Matches the scalar kernel entry by entry.
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        const Eigen::VectorXd a = X.row(i), b = X.row(j);
        EXPECT_NEAR(K(i, j), composite_kernel({a.data(), 30}, {b.data(), 30}, spec, hp), 1e-12);
      }
    }
  }
}

TEST(Gram, SingleRowAndEmpty) {
  const KernelSpec spec{KernelKind::SquaredExponential, single_layout(3)};
  const HyperParams hp = HyperParams::zeros(spec, false);
  const Eigen::MatrixXd X = random_matrix(1, 3, 1);
  const Eigen::MatrixXd K = gram(X, spec, hp);
  ASSERT_EQ(K.rows(), 1);
  EXPECT_DOUBLE_EQ(K(0, 0), 1.0);
  EXPECT_THROW(gram(Eigen::MatrixXd(0, 3), spec, hp), std::invalid_argument);
}

TEST(Gram, GradientMatchesFiniteDifferences) {
  const Eigen::MatrixXd X = random_matrix(8, 30, 21);
  for (auto kind : {KernelKind::Linear, KernelKind::SquaredExponential, KernelKind::NeuralNetwork}) {
    for (std::size_t S : {1u, 3u, 10u}) {
      const KernelSpec spec{kind, chunk_layout(30, S)};
      const HyperParams hp = random_hp(spec, false, 100 + S);
      const Eigen::VectorXd theta = hp.to_vector();
      for (std::size_t p = 0; p < hp.size(); ++p) {
        const Eigen::MatrixXd dK = gram_gradient(X, spec, hp, p);
        Eigen::MatrixXd fd(8, 8);
        const double h = 1e-5;
        Eigen::VectorXd lo = theta, hi = theta;
        lo[static_cast<Eigen::Index>(p)] -= h;
        hi[static_cast<Eigen::Index>(p)] += h;
        HyperParams hl = hp, hh = hp;
        hl.assign(lo);
        hh.assign(hi);
        fd = (gram(X, spec, hh) - gram(X, spec, hl)) / (2 * h);
        const double scale = std::max(dK.norm(), 1e-8);
        EXPECT_LT((dK - fd).norm() / scale, 1e-5) << to_string(kind) << " S=" << S << " p=" << p;
      }
    }
  }
}

TEST(Gram, GradientIndexOutOfRange) {
  const KernelSpec spec{KernelKind::Linear, single_layout(3)};
  const HyperParams hp = HyperParams::zeros(spec, false);
  EXPECT_THROW(gram_gradient(random_matrix(2, 3, 1), spec, hp, hp.size()), std::out_of_range);
}

TEST(Gram, CrossStatsMatchSymmetric) {
  const Eigen::MatrixXd X = random_matrix(6, 9, 2);
  const KernelSpec spec{KernelKind::NeuralNetwork, chunk_layout(9, 3)};
  const HyperParams hp = random_hp(spec, false, 9);
  const Eigen::MatrixXd a = PairwiseStats(X, X, spec).covariance(hp);
  const Eigen::MatrixXd b = PairwiseStats(X, spec).covariance(hp);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((self_covariance(X, spec, hp) - b.diagonal()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(HyperParams, FlatLayoutRoundTrip) {
  const KernelSpec spec{KernelKind::SquaredExponential, chunk_layout(6, 3)};
  HyperParams hp = HyperParams::zeros(spec, true);
  EXPECT_EQ(hp.size(), 3u + 3u + 1u + 1u);
  EXPECT_EQ(hp.noise_index(), 6u);
  EXPECT_EQ(hp.mean_index(), 7u);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(8, 0.0, 0.7);
  hp.assign(v);
  EXPECT_EQ(hp.to_vector(), v);
  EXPECT_DOUBLE_EQ(*hp.log_sigma_n, 0.6);
  EXPECT_DOUBLE_EQ(hp.mean_const, 0.7);
  EXPECT_THROW(hp.assign(Eigen::VectorXd::Zero(3)), std::invalid_argument);

  const KernelSpec lin{KernelKind::Linear, chunk_layout(6, 3)};
  EXPECT_EQ(HyperParams::zeros(lin, false).size(), 4u);
}
