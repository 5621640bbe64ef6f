#pragma once

#include <span>
#include <vector>

#include "nimai/dataset.hpp"

namespace nimai {

// Distribution diagnostics on a feature subset: histogram entropy (20 bins
// on [0,1], natural log) and the adjusted Fisher-Pearson skewness, before
// and after augmentation.
struct FeatureShift {
  std::size_t feature = 0;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  double skew_before = 0.0;
  double skew_after = 0.0;
};

struct FeatureShiftReport {
  std::vector<FeatureShift> rows;
  double entropy_change_pct = 0.0;        // mean percent entropy change
  double abs_skew_reduction_pct = 0.0;    // mean percent |skew| move toward 0
};

double histogram_entropy(std::span<const double> values,
                         std::size_t bins = 20);
double sample_skewness(std::span<const double> values);

FeatureShiftReport feature_shift_report(
    const Dataset& real, const Dataset& augmented,
    std::span<const std::size_t> feature_subset);

}  // namespace nimai
