#include "gpmkl/subspaces.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

namespace gpmkl {

void VolumeDims::validate() const {
  if (nx == 0 || ny == 0 || nz == 0) {
    throw std::invalid_argument("volume dimensions must be positive");
  }
}

SubspaceLayout::SubspaceLayout(std::vector<Bag> bags, std::size_t dim, LayoutKind kind,
                               std::size_t cube_edge)
    : bags_(std::move(bags)), dim_(dim), kind_(kind), cube_edge_(cube_edge) {
  if (bags_.empty()) throw std::invalid_argument("layout needs at least one bag");
  std::vector<char> seen(dim_, 0);
  std::size_t covered = 0;
  for (const auto& bag : bags_) {
    if (bag.empty()) throw std::invalid_argument("layout bags must be non-empty");
    for (auto idx : bag) {
      if (idx >= dim_) throw std::invalid_argument("bag index out of range");
      if (seen[idx]) throw std::invalid_argument("bags overlap");
      seen[idx] = 1;
      ++covered;
    }
  }
  if (covered != dim_) throw std::invalid_argument("bags do not cover every feature");
}

const SubspaceLayout::Bag& SubspaceLayout::bag(std::size_t s) const {
  if (s >= bags_.size()) throw std::out_of_range("bag index out of range");
  return bags_[s];
}

std::string SubspaceLayout::describe() const {
  switch (kind_) {
    case LayoutKind::Single: return "single";
    case LayoutKind::Slices: return "slices";
    case LayoutKind::Cubes: return "cube:" + std::to_string(cube_edge_);
  }
  return "single";
}

SubspaceLayout single_layout(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("feature length must be positive");
  SubspaceLayout::Bag bag(dim);
  std::iota(bag.begin(), bag.end(), 0u);
  return SubspaceLayout({std::move(bag)}, dim, LayoutKind::Single);
}

SubspaceLayout slice_layout(const VolumeDims& dims) {
  dims.validate();
  const std::size_t plane = dims.nx * dims.ny;
  std::vector<SubspaceLayout::Bag> bags(dims.nz);
  for (std::size_t z = 0; z < dims.nz; ++z) {
    auto& bag = bags[z];
    bag.resize(plane);
    std::iota(bag.begin(), bag.end(), static_cast<std::uint32_t>(z * plane));
  }
  return SubspaceLayout(std::move(bags), dims.size(), LayoutKind::Slices);
}

SubspaceLayout cube_layout(const VolumeDims& dims, std::size_t edge) {
  dims.validate();
  if (edge == 0) throw std::invalid_argument("cube edge must be positive");
  const auto cells = [edge](std::size_t n) { return (n + edge - 1) / edge; };
  const std::size_t cx = cells(dims.nx), cy = cells(dims.ny), cz = cells(dims.nz);

  std::vector<SubspaceLayout::Bag> bags;
  bags.reserve(cx * cy * cz);
  for (std::size_t bz = 0; bz < cz; ++bz) {
    for (std::size_t by = 0; by < cy; ++by) {
      for (std::size_t bx = 0; bx < cx; ++bx) {
        SubspaceLayout::Bag bag;
        const std::size_t z1 = std::min(dims.nz, (bz + 1) * edge);
        const std::size_t y1 = std::min(dims.ny, (by + 1) * edge);
        const std::size_t x1 = std::min(dims.nx, (bx + 1) * edge);
        for (std::size_t z = bz * edge; z < z1; ++z)
          for (std::size_t y = by * edge; y < y1; ++y)
            for (std::size_t x = bx * edge; x < x1; ++x)
              bag.push_back(static_cast<std::uint32_t>(x + dims.nx * (y + dims.ny * z)));
        bags.push_back(std::move(bag));
      }
    }
  }
  return SubspaceLayout(std::move(bags), dims.size(), LayoutKind::Cubes, edge);
}

SubspaceLayout parse_layout(const std::string& text, const VolumeDims& dims) {
  if (text == "single") return single_layout(dims.size());
  if (text == "slices") return slice_layout(dims);
  if (text.rfind("cube:", 0) == 0) {
    std::size_t edge = 0;
    const char* first = text.data() + 5;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, edge);
    if (ec != std::errc() || ptr != last || edge == 0) {
      throw std::invalid_argument("bad cube edge in layout '" + text + "'");
    }
    return cube_layout(dims, edge);
  }
  throw std::invalid_argument("unknown layout '" + text + "'");
}

Eigen::VectorXd extract_subvector(std::span<const double> x, const SubspaceLayout& layout,
                                  std::size_t s) {
  if (x.size() != layout.dim()) throw std::invalid_argument("feature length does not match layout");
  const auto& bag = layout.bag(s);
  Eigen::VectorXd out(static_cast<Eigen::Index>(bag.size()));
  for (std::size_t k = 0; k < bag.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[bag[k]];
  return out;
}

Eigen::MatrixXd extract_bag_columns(const Eigen::MatrixXd& X, const SubspaceLayout& layout,
                                    std::size_t s) {
  if (static_cast<std::size_t>(X.cols()) != layout.dim()) {
    throw std::invalid_argument("feature length does not match layout");
  }
  const auto& bag = layout.bag(s);
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(bag.size()));
  for (std::size_t k = 0; k < bag.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(bag[k]);
  return out;
}

RelevanceReport relevance_scores(const Eigen::MatrixXd& per_fold_weights) {
  const auto folds = per_fold_weights.rows();
  const auto bags = per_fold_weights.cols();
  if (folds == 0 || bags == 0) throw std::invalid_argument("empty weight matrix");
  if (!per_fold_weights.allFinite() || (per_fold_weights.array() < 0.0).any()) {
    throw std::invalid_argument("mixing weights must be finite and non-negative");
  }

  RelevanceReport report;
  report.n_folds = static_cast<std::size_t>(folds);
  report.scores.assign(static_cast<std::size_t>(bags), 0.0);
  for (Eigen::Index f = 0; f < folds; ++f) {
    const double top = per_fold_weights.row(f).maxCoeff();
    if (!(top > 0.0)) {
      throw std::invalid_argument("fold " + std::to_string(f) + " has all-zero mixing weights");
    }
    for (Eigen::Index s = 0; s < bags; ++s) {
      report.scores[static_cast<std::size_t>(s)] += per_fold_weights(f, s) / top;
    }
  }

  report.ranking.resize(report.scores.size());
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return report.scores[a] > report.scores[b]; });
  return report;
}

}  // namespace gpmkl
