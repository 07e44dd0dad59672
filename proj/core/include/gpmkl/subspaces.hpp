#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpmkl {

/// Voxel grid extents. Volumes are flattened x-fastest, then y, then z:
/// index = x + nx * (y + ny * z).
struct VolumeDims {
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::size_t nz = 1;

  std::size_t size() const { return nx * ny * nz; }
  void validate() const;
  bool operator==(const VolumeDims&) const = default;
};

enum class LayoutKind { Single, Slices, Cubes };

/// A partition of feature indices {0..D-1} into S non-empty, disjoint bags.
class SubspaceLayout {
 public:
  using Bag = std::vector<std::uint32_t>;

  SubspaceLayout() = default;
  /// Validates the partition property; throws std::invalid_argument.
  SubspaceLayout(std::vector<Bag> bags, std::size_t dim, LayoutKind kind,
                 std::size_t cube_edge = 0);

  std::size_t num_bags() const { return bags_.size(); }
  std::size_t dim() const { return dim_; }
  LayoutKind kind() const { return kind_; }
  std::size_t cube_edge() const { return cube_edge_; }
  const Bag& bag(std::size_t s) const;
  const std::vector<Bag>& bags() const { return bags_; }

  /// True when S < (D+1)/2, the hyperparameter budget for two-parameter
  /// basis kernels.
  bool within_two_parameter_budget() const { return 2 * num_bags() < dim_ + 1; }

  /// "single", "slices" or "cube:E".
  std::string describe() const;

 private:
  std::vector<Bag> bags_;
  std::size_t dim_ = 0;
  LayoutKind kind_ = LayoutKind::Single;
  std::size_t cube_edge_ = 0;
};

/// One bag holding every feature, in order.
SubspaceLayout single_layout(std::size_t dim);

/// One bag per axial (z) slice.
SubspaceLayout slice_layout(const VolumeDims& dims);

/// Non-overlapping edge^3 cubes; boundary cubes are truncated to the grid.
SubspaceLayout cube_layout(const VolumeDims& dims, std::size_t edge);

/// Parses "single", "slices" or "cube:E" against the given grid.
SubspaceLayout parse_layout(const std::string& text, const VolumeDims& dims);

Eigen::VectorXd extract_subvector(std::span<const double> x,
                                  const SubspaceLayout& layout, std::size_t s);

/// Gathers the columns of X belonging to bag s.
Eigen::MatrixXd extract_bag_columns(const Eigen::MatrixXd& X,
                                    const SubspaceLayout& layout, std::size_t s);

struct RelevanceReport {
  std::vector<double> scores;       // one per bag, in [0, n_folds]
  std::vector<std::size_t> ranking;  // bag indices, descending score
  std::size_t n_folds = 0;
};

/// Max-normalizes each fold's mixing weights and sums across folds.
/// Rows are folds, columns are bags. Ties rank by ascending bag index.
RelevanceReport relevance_scores(const Eigen::MatrixXd& per_fold_weights);

}  // namespace gpmkl
