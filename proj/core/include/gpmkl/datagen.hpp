#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gpmkl/dataset.hpp"

namespace gpmkl {

struct SyntheticConfig {
  VolumeDims dims;
  std::size_t n_per_class = 50;
  int n_classes = 2;
  std::string layout = "cube:8";  // "slices" or "cube:E"
  std::vector<std::size_t> informative_bags;
  double effect_size = 3.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian background N(0, noise_std^2) everywhere; voxels of informative
/// bags are shifted by c * effect_size / (n_classes - 1) for class c.
/// Samples alternate classes (sample i has class i mod n_classes) and every
/// voxel is representable as a 32-bit float.
Dataset generate_synthetic(const SyntheticConfig& cfg);

}  // namespace gpmkl
