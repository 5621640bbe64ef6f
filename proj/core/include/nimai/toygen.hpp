#pragma once

#include <cstdint>
#include <vector>

#include "nimai/dataset.hpp"
#include "nimai/drift.hpp"

namespace nimai {

// Seeded Gaussian-cluster datasets for desk-scale experiments and demos.
// Values are clamped to [0,1], so generated data is already normalized.

Schema make_toy_schema(std::size_t n_features, std::size_t n_classes);

struct GaussianClusterSpec {
  std::vector<double> mean;  // per-feature, inside [0,1]
  double sigma = 0.05;
  std::size_t count = 100;
  int label = 0;
};

Dataset make_gaussian_dataset(const Schema& schema,
                              const std::vector<GaussianClusterSpec>& clusters,
                              std::uint64_t seed);

struct ToyDriftSpec {
  std::size_t n_features = 8;
  std::size_t n_months = 4;
  std::size_t rows_per_month = 1200;
  double majority_center = 0.35;
  double minority_center = 0.65;
  double sigma = 0.06;
  double minority_fraction = 0.3;
  std::size_t drift_month = 2;   // first month with the shifted minority
  double drift_shift = -0.25;    // added to the minority center
};

// Month 0 is the training month; from drift_month onward the minority
// cluster mean moves by drift_shift.
DriftScenario make_drift_scenario(const ToyDriftSpec& spec,
                                  std::uint64_t seed);

}  // namespace nimai
