#include "gpmkl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpmkl {

namespace {

void check_pair(std::span<const double> xi, std::span<const double> xj) {
  if (xi.size() != xj.size()) throw std::invalid_argument("kernel inputs differ in length");
}

void check_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("kernel input is not finite");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Points as contiguous columns: (|bag| x N).
Eigen::MatrixXd bag_points(const Eigen::MatrixXd& X, const SubspaceLayout& layout, std::size_t s) {
  const auto& bag = layout.bag(s);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(bag.size()), X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (std::size_t k = 0; k < bag.size(); ++k) out(static_cast<Eigen::Index>(k), i) = X(i, bag[k]);
  }
  return out;
}

void check_layout(const Eigen::MatrixXd& X, const KernelSpec& spec) {
  if (X.rows() == 0) throw std::invalid_argument("empty input matrix");
  if (static_cast<std::size_t>(X.cols()) != spec.layout.dim()) {
    throw std::invalid_argument("feature length does not match layout");
  }
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Linear: return "lin";
    case KernelKind::SquaredExponential: return "se";
    case KernelKind::NeuralNetwork: return "nn";
  }
  return "se";
}

KernelKind parse_kernel_kind(const std::string& text) {
  if (text == "lin") return KernelKind::Linear;
  if (text == "se") return KernelKind::SquaredExponential;
  if (text == "nn") return KernelKind::NeuralNetwork;
  throw std::invalid_argument("unknown kernel '" + text + "'");
}

HyperParams HyperParams::zeros(const KernelSpec& spec, bool with_noise) {
  HyperParams hp;
  const auto S = static_cast<Eigen::Index>(spec.num_kernels());
  hp.log_sigma_f = Eigen::VectorXd::Zero(S);
  if (has_bandwidth(spec.kind)) hp.log_ell = Eigen::VectorXd::Zero(S);
  if (with_noise) hp.log_sigma_n = 0.0;
  return hp;
}

std::size_t HyperParams::size() const {
  return static_cast<std::size_t>(log_sigma_f.size() + log_ell.size()) +
         (log_sigma_n ? 1u : 0u) + 1u;
}

std::size_t HyperParams::noise_index() const {
  if (!log_sigma_n) throw std::logic_error("hyperparameters carry no noise term");
  return static_cast<std::size_t>(log_sigma_f.size() + log_ell.size());
}

Eigen::VectorXd HyperParams::to_vector() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index k = 0;
  flat.segment(k, log_sigma_f.size()) = log_sigma_f;
  k += log_sigma_f.size();
  flat.segment(k, log_ell.size()) = log_ell;
  k += log_ell.size();
  if (log_sigma_n) flat[k++] = *log_sigma_n;
  flat[k] = mean_const;
  return flat;
}

void HyperParams::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) {
    throw std::invalid_argument("flat hyperparameter vector has the wrong size");
  }
  Eigen::Index k = 0;
  log_sigma_f = flat.segment(k, log_sigma_f.size());
  k += log_sigma_f.size();
  log_ell = flat.segment(k, log_ell.size());
  k += log_ell.size();
  if (log_sigma_n) log_sigma_n = flat[k++];
  mean_const = flat[k];
}

void HyperParams::validate(const KernelSpec& spec) const {
  const auto S = static_cast<Eigen::Index>(spec.num_kernels());
  if (log_sigma_f.size() != S) throw std::invalid_argument("one log_sigma_f per basis kernel required");
  const Eigen::Index ells = has_bandwidth(spec.kind) ? S : 0;
  if (log_ell.size() != ells) throw std::invalid_argument("log_ell size does not match kernel kind");
  if (!to_vector().allFinite()) throw std::invalid_argument("hyperparameters must be finite");
}

double kernel_lin(std::span<const double> xi, std::span<const double> xj, double log_sigma_f) {
  check_pair(xi, xj);
  check_finite(xi);
  check_finite(xj);
  return std::exp(2.0 * log_sigma_f) * dot(xi, xj);
}

double kernel_se(std::span<const double> xi, std::span<const double> xj, double log_ell,
                 double log_sigma_f) {
  check_pair(xi, xj);
  const double inv_ell2 = std::exp(-2.0 * log_ell);
  return std::exp(2.0 * log_sigma_f) * std::exp(-0.5 * squared_distance(xi, xj) * inv_ell2);
}

double kernel_nn(std::span<const double> xi, std::span<const double> xj, double log_ell,
                 double log_sigma_f) {
  check_pair(xi, xj);
  const double a = 2.0 * std::exp(-2.0 * log_ell);
  const double gij = 1.0 + dot(xi, xj);
  const double gii = 1.0 + dot(xi, xi);
  const double gjj = 1.0 + dot(xj, xj);
  const double u = a * gij / std::sqrt((1.0 + a * gii) * (1.0 + a * gjj));
  return std::exp(2.0 * log_sigma_f) * std::asin(u);
}

double composite_kernel(std::span<const double> xi, std::span<const double> xj,
                        const KernelSpec& spec, const HyperParams& hp) {
  check_pair(xi, xj);
  if (xi.size() != spec.layout.dim()) throw std::invalid_argument("feature length does not match layout");
  if (hp.num_kernels() != spec.num_kernels()) throw std::invalid_argument("hyperparameters do not match layout");

  double total = 0.0;
  for (std::size_t s = 0; s < spec.num_kernels(); ++s) {
    const Eigen::VectorXd a = extract_subvector(xi, spec.layout, s);
    const Eigen::VectorXd b = extract_subvector(xj, spec.layout, s);
    const auto si = static_cast<Eigen::Index>(s);
    switch (spec.kind) {
      case KernelKind::Linear:
        total += kernel_lin(as_span(a), as_span(b), hp.log_sigma_f[si]);
        break;
      case KernelKind::SquaredExponential:
        total += kernel_se(as_span(a), as_span(b), hp.log_ell[si], hp.log_sigma_f[si]);
        break;
      case KernelKind::NeuralNetwork:
        total += kernel_nn(as_span(a), as_span(b), hp.log_ell[si], hp.log_sigma_f[si]);
        break;
    }
  }
  return total;
}

PairwiseStats::PairwiseStats(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const KernelSpec& spec)
    : kind_(spec.kind), rows_(A.rows()), cols_(B.rows()) {
  check_layout(A, spec);
  check_layout(B, spec);
  const std::size_t S = spec.num_kernels();
  pair_.resize(S);
  if (kind_ == KernelKind::NeuralNetwork) {
    self_rows_.resize(S);
    self_cols_.resize(S);
  }
  for (std::size_t s = 0; s < S; ++s) {
    const Eigen::MatrixXd Pa = bag_points(A, spec.layout, s);
    const Eigen::MatrixXd Pb = bag_points(B, spec.layout, s);
    auto& P = pair_[s];
    if (kind_ == KernelKind::SquaredExponential) {
      P.resize(rows_, cols_);
      for (Eigen::Index j = 0; j < cols_; ++j)
        for (Eigen::Index i = 0; i < rows_; ++i) P(i, j) = (Pa.col(i) - Pb.col(j)).squaredNorm();
    } else {
      P = Pa.transpose() * Pb;
      if (kind_ == KernelKind::NeuralNetwork) {
        P.array() += 1.0;
        self_rows_[s] = (Pa.colwise().squaredNorm().array() + 1.0).transpose();
        self_cols_[s] = (Pb.colwise().squaredNorm().array() + 1.0).transpose();
      }
    }
  }
}

PairwiseStats::PairwiseStats(const Eigen::MatrixXd& X, const KernelSpec& spec)
    : kind_(spec.kind), rows_(X.rows()), cols_(X.rows()), symmetric_(true) {
  check_layout(X, spec);
  const std::size_t S = spec.num_kernels();
  pair_.resize(S);
  if (kind_ == KernelKind::NeuralNetwork) {
    self_rows_.resize(S);
    self_cols_.resize(S);
  }
  const Eigen::Index n = rows_;
  for (std::size_t s = 0; s < S; ++s) {
    const Eigen::MatrixXd Px = bag_points(X, spec.layout, s);
    auto& P = pair_[s];
    P.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        P(i, j) = kind_ == KernelKind::SquaredExponential ? (Px.col(i) - Px.col(j)).squaredNorm()
                                                         : Px.col(i).dot(Px.col(j));
      }
    }
    P.triangularView<Eigen::StrictlyLower>() = P.transpose();
    if (kind_ == KernelKind::NeuralNetwork) {
      P.array() += 1.0;
      self_rows_[s] = P.diagonal();
      self_cols_[s] = self_rows_[s];
    }
  }
}

Eigen::MatrixXd PairwiseStats::bag_covariance(const HyperParams& hp, std::size_t s) const {
  const auto si = static_cast<Eigen::Index>(s);
  const double sf2 = std::exp(2.0 * hp.log_sigma_f[si]);
  const auto& P = pair_.at(s);
  Eigen::MatrixXd K;
  switch (kind_) {
    case KernelKind::Linear:
      K = sf2 * P;
      break;
    case KernelKind::SquaredExponential: {
      const double inv_ell2 = std::exp(-2.0 * hp.log_ell[si]);
      K = sf2 * (-0.5 * inv_ell2 * P.array()).exp().matrix();
      break;
    }
    case KernelKind::NeuralNetwork: {
      const double a = 2.0 * std::exp(-2.0 * hp.log_ell[si]);
      const Eigen::ArrayXd dr = (1.0 + a * self_rows_[s].array()).sqrt();
      const Eigen::ArrayXd dc = (1.0 + a * self_cols_[s].array()).sqrt();
      K.resize(rows_, cols_);
      for (Eigen::Index j = 0; j < cols_; ++j)
        for (Eigen::Index i = 0; i < rows_; ++i) K(i, j) = sf2 * std::asin(a * P(i, j) / (dr[i] * dc[j]));
      break;
    }
  }
  if (symmetric_) K.triangularView<Eigen::StrictlyLower>() = K.transpose();
  return K;
}

Eigen::MatrixXd PairwiseStats::covariance(const HyperParams& hp) const {
  if (hp.num_kernels() != pair_.size()) throw std::invalid_argument("hyperparameters do not match layout");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(rows_, cols_);
  for (std::size_t s = 0; s < pair_.size(); ++s) K += bag_covariance(hp, s);
  return K;
}

Eigen::MatrixXd PairwiseStats::covariance_gradient(const HyperParams& hp, std::size_t index) const {
  if (index >= hp.size()) throw std::out_of_range("hyperparameter index out of range");
  const std::size_t S = pair_.size();
  if (index < S) return 2.0 * bag_covariance(hp, index);
  const std::size_t ells = static_cast<std::size_t>(hp.log_ell.size());
  if (index >= S + ells) return Eigen::MatrixXd::Zero(rows_, cols_);

  const std::size_t s = index - S;
  const auto si = static_cast<Eigen::Index>(s);
  const double sf2 = std::exp(2.0 * hp.log_sigma_f[si]);
  const auto& P = pair_[s];
  Eigen::MatrixXd G(rows_, cols_);
  if (kind_ == KernelKind::SquaredExponential) {
    const double inv_ell2 = std::exp(-2.0 * hp.log_ell[si]);
    G = (sf2 * inv_ell2) * (P.array() * (-0.5 * inv_ell2 * P.array()).exp()).matrix();
  } else {
    // d asin(u) / d log(ell), u = a g_ij / sqrt((1 + a g_ii)(1 + a g_jj)), a = 2 / ell^2.
    const double a = 2.0 * std::exp(-2.0 * hp.log_ell[si]);
    const Eigen::ArrayXd rr = self_rows_[s].array() / (1.0 + a * self_rows_[s].array());
    const Eigen::ArrayXd rc = self_cols_[s].array() / (1.0 + a * self_cols_[s].array());
    const Eigen::ArrayXd dr = (1.0 + a * self_rows_[s].array()).sqrt();
    const Eigen::ArrayXd dc = (1.0 + a * self_cols_[s].array()).sqrt();
    for (Eigen::Index j = 0; j < cols_; ++j) {
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double u = a * P(i, j) / (dr[i] * dc[j]);
        const double du = u * (-2.0 + a * (rr[i] + rc[j]));
        G(i, j) = sf2 * du / std::sqrt(1.0 - u * u);
      }
    }
  }
  if (symmetric_) G.triangularView<Eigen::StrictlyLower>() = G.transpose();
  return G;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const KernelSpec& spec, const HyperParams& hp) {
  hp.validate(spec);
  return PairwiseStats(X, spec).covariance(hp);
}

Eigen::MatrixXd gram_gradient(const Eigen::MatrixXd& X, const KernelSpec& spec,
                              const HyperParams& hp, std::size_t param_index) {
  hp.validate(spec);
  if (param_index >= hp.size()) throw std::out_of_range("hyperparameter index out of range");
  return PairwiseStats(X, spec).covariance_gradient(hp, param_index);
}

Eigen::VectorXd self_covariance(const Eigen::MatrixXd& X, const KernelSpec& spec,
                                const HyperParams& hp) {
  check_layout(X, spec);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (std::size_t s = 0; s < spec.num_kernels(); ++s) {
    const auto si = static_cast<Eigen::Index>(s);
    const double sf2 = std::exp(2.0 * hp.log_sigma_f[si]);
    const Eigen::MatrixXd P = bag_points(X, spec.layout, s);
    switch (spec.kind) {
      case KernelKind::Linear:
        out += sf2 * P.colwise().squaredNorm().transpose();
        break;
      case KernelKind::SquaredExponential:
        out.array() += sf2;
        break;
      case KernelKind::NeuralNetwork: {
        const double a = 2.0 * std::exp(-2.0 * hp.log_ell[si]);
        const Eigen::ArrayXd q = a * (P.colwise().squaredNorm().array() + 1.0).transpose();
        out += (sf2 * (q / (1.0 + q)).asin()).matrix();
        break;
      }
    }
  }
  return out;
}

Eigen::VectorXd median_bag_distances(const Eigen::MatrixXd& X, const SubspaceLayout& layout) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(layout.num_bags()));
  if (n < 2) return out;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (std::size_t s = 0; s < layout.num_bags(); ++s) {
    const Eigen::MatrixXd P = bag_points(X, layout, s);
    dists.clear();
    for (Eigen::Index j = 1; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) dists.push_back((P.col(i) - P.col(j)).norm());
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    if (*mid > 0.0 && std::isfinite(*mid)) out[static_cast<Eigen::Index>(s)] = *mid;
  }
  return out;
}

}  // namespace gpmkl
