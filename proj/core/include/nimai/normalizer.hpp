#pragma once

#include <filesystem>
#include <vector>

#include "nimai/dataset.hpp"

namespace nimai {

// Per-feature min/max scaling to [0, 1], fit on training rows only.
// Out-of-range values at apply time are clamped; a constant training
// feature maps to 0.0.
struct Normalizer {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t n_features() const { return min.size(); }
};

Normalizer fit_normalizer(const Dataset& train);

Dataset apply_normalizer(const Normalizer& norm, const Dataset& data);

// Inverse transform for inspection. Features flagged integer-valued in the
// schema are rounded. Constant features recover their training value.
Dataset invert_normalizer(const Normalizer& norm, const Dataset& data);

void save_normalizer(const std::filesystem::path& path, const Normalizer& n);
Normalizer load_normalizer(const std::filesystem::path& path);

}  // namespace nimai
