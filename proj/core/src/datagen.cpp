#include "gpmkl/datagen.hpp"

#include <random>
#include <stdexcept>

namespace gpmkl {

void SyntheticConfig::validate() const {
  dims.validate();
  if (n_classes < 2 || n_classes > 3) throw std::invalid_argument("synthetic data supports 2 or 3 classes");
  if (n_per_class == 0) throw std::invalid_argument("n_per_class must be positive");
  if (!(effect_size >= 0.0)) throw std::invalid_argument("effect size must be non-negative");
  if (!(noise_std > 0.0)) throw std::invalid_argument("noise std must be positive");
  if (layout == "single") throw std::invalid_argument("synthetic layout must be slices or cube:E");
  const SubspaceLayout bags = parse_layout(layout, dims);
  for (std::size_t b : informative_bags) {
    if (b >= bags.num_bags()) throw std::invalid_argument("informative bag " + std::to_string(b) + " out of range");
  }
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const SubspaceLayout layout = parse_layout(cfg.layout, cfg.dims);
  std::vector<char> informative(cfg.dims.size(), 0);
  for (std::size_t b : cfg.informative_bags) {
    for (auto idx : layout.bag(b)) informative[idx] = 1;
  }

  Dataset data;
  data.dims = cfg.dims;
  data.n_classes = cfg.n_classes;
  data.layout = cfg.layout;
  data.ground_truth_bags = cfg.informative_bags;
  const std::size_t n = cfg.n_per_class * static_cast<std::size_t>(cfg.n_classes);
  const auto D = static_cast<Eigen::Index>(cfg.dims.size());
  data.X.resize(static_cast<Eigen::Index>(n), D);
  data.labels.resize(n);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(cfg.n_classes));
    data.labels[i] = c;
    const double shift = c * cfg.effect_size / (cfg.n_classes - 1);
    for (Eigen::Index d = 0; d < D; ++d) {
      const double v = noise(rng) + (informative[static_cast<std::size_t>(d)] ? shift : 0.0);
      data.X(static_cast<Eigen::Index>(i), d) = static_cast<double>(static_cast<float>(v));
    }
  }
  return data;
}

}  // namespace gpmkl
