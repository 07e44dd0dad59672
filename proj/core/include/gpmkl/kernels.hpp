#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpmkl/subspaces.hpp"

namespace gpmkl {

enum class KernelKind { Linear, SquaredExponential, NeuralNetwork };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& text);  // "lin" | "se" | "nn"

/// Whether a basis kernel of this kind carries a bandwidth.
inline bool has_bandwidth(KernelKind kind) { return kind != KernelKind::Linear; }

/// Homogeneous conic sum: every bag of the layout gets a basis kernel of one kind.
struct KernelSpec {
  KernelKind kind = KernelKind::SquaredExponential;
  SubspaceLayout layout;

  std::size_t num_kernels() const { return layout.num_bags(); }
};

/// Log-domain hyperparameters. The flat parameter vector used by the
/// optimizer is laid out as
///   [log_sigma_f(0..S-1), log_ell(0..S-1) if present, log_sigma_n if present, mean_const].
struct HyperParams {
  Eigen::VectorXd log_sigma_f;
  Eigen::VectorXd log_ell;             // empty for linear kernels
  std::optional<double> log_sigma_n;   // regression only
  double mean_const = 0.0;

  static HyperParams zeros(const KernelSpec& spec, bool with_noise);

  std::size_t num_kernels() const { return static_cast<std::size_t>(log_sigma_f.size()); }
  std::size_t size() const;

  std::size_t sigma_f_index(std::size_t s) const { return s; }
  std::size_t ell_index(std::size_t s) const { return num_kernels() + s; }
  std::size_t noise_index() const;
  std::size_t mean_index() const { return size() - 1; }

  Eigen::VectorXd to_vector() const;
  /// Overwrites every entry from a flat vector of matching size.
  void assign(const Eigen::VectorXd& flat);

  /// Mixing weights beta_s = sigma_f_s^2.
  Eigen::VectorXd mixing_weights() const { return (2.0 * log_sigma_f.array()).exp().matrix(); }

  /// Throws std::invalid_argument on shape mismatch with spec or non-finite entries.
  void validate(const KernelSpec& spec) const;
};

double kernel_lin(std::span<const double> xi, std::span<const double> xj, double log_sigma_f);
double kernel_se(std::span<const double> xi, std::span<const double> xj, double log_ell,
                 double log_sigma_f);
/// Neural-network covariance with Sigma = ell^-2 I over the augmented input (1, x).
double kernel_nn(std::span<const double> xi, std::span<const double> xj, double log_ell,
                 double log_sigma_f);

double composite_kernel(std::span<const double> xi, std::span<const double> xj,
                        const KernelSpec& spec, const HyperParams& hp);

/// Per-bag pairwise geometry between two point sets, independent of the
/// hyperparameters. For SE it holds squared distances; for LIN and NN the
/// inner products (augmented with a leading 1 for NN). Built once per data
/// set, it turns every Gram / gradient evaluation into O(S N^2) work.
class PairwiseStats {
 public:
  PairwiseStats(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec);
  /// Symmetric case; only the upper triangle is computed and then mirrored.
  PairwiseStats(const Eigen::MatrixXd& X, const KernelSpec& spec);

  KernelKind kind() const { return kind_; }
  std::size_t num_bags() const { return pair_.size(); }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool symmetric() const { return symmetric_; }

  const Eigen::MatrixXd& pair(std::size_t s) const { return pair_[s]; }
  const Eigen::VectorXd& self_rows(std::size_t s) const { return self_rows_[s]; }
  const Eigen::VectorXd& self_cols(std::size_t s) const { return self_cols_[s]; }

  /// Covariance contribution of bag s.
  Eigen::MatrixXd bag_covariance(const HyperParams& hp, std::size_t s) const;
  /// Sum of all bag contributions.
  Eigen::MatrixXd covariance(const HyperParams& hp) const;
  /// dK / d(theta_index) for the flat log-domain parameter at index. Entries
  /// for the noise and mean parameters yield a zero matrix.
  Eigen::MatrixXd covariance_gradient(const HyperParams& hp, std::size_t index) const;

 private:
  KernelKind kind_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  bool symmetric_ = false;
  std::vector<Eigen::MatrixXd> pair_;
  std::vector<Eigen::VectorXd> self_rows_;  // NN only
  std::vector<Eigen::VectorXd> self_cols_;  // NN only
};

/// Gram matrix of X (rows are points). Exactly symmetric.
Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const KernelSpec& spec, const HyperParams& hp);

Eigen::MatrixXd gram_gradient(const Eigen::MatrixXd& X, const KernelSpec& spec,
                              const HyperParams& hp, std::size_t param_index);

/// k(x, x) for every row of X.
Eigen::VectorXd self_covariance(const Eigen::MatrixXd& X, const KernelSpec& spec,
                                const HyperParams& hp);

/// Median pairwise Euclidean distance within each bag (1.0 when degenerate).
Eigen::VectorXd median_bag_distances(const Eigen::MatrixXd& X, const SubspaceLayout& layout);

}  // namespace gpmkl
