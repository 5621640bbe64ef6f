#pragma once

#include <vector>

#include "nimai/matrix.hpp"

namespace nimai {

// Upper-tail probabilities used by the rank tests.
double chi2_sf(double x, double df);
double normal_sf(double z);

// Midranks of the pooled values (ties share the average rank).
std::vector<double> midranks(const std::vector<double>& pooled);

struct KruskalWallisResult {
  double h = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

// Tie-corrected Kruskal-Wallis H with a chi-squared p-value on
// (groups - 1) degrees of freedom. When every pooled value is identical the
// statistic is undefined and p = 1 by convention.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

enum class DunnAdjustment { kNone, kBonferroni };

struct DunnResult {
  Mat p;       // symmetric, unit diagonal
  Mat z;       // signed mean-rank z statistics
};

// Dunn's post-hoc pairwise comparisons on mean ranks with tie correction.
// Only valid after a significant Kruskal-Wallis result; calling it when the
// omnibus test is not significant (p >= alpha) is an error. Unadjusted
// two-sided p-values by default.
DunnResult dunn_test(const std::vector<std::vector<double>>& groups,
                     double alpha = 0.05,
                     DunnAdjustment adjust = DunnAdjustment::kNone);

}  // namespace nimai
