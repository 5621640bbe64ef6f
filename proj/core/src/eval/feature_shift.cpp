#include "nimai/eval/feature_shift.hpp"

#include <algorithm>
#include <cmath>

namespace nimai {

double histogram_entropy(std::span<const double> values, std::size_t bins) {
  if (values.empty() || bins == 0) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto b = std::size_t(std::clamp(v, 0.0, 1.0) * double(bins));
    if (b >= bins) b = bins - 1;  // v == 1.0 lands in the top bin
    counts[b] += 1;
  }
  double entropy = 0.0;
  const double n = double(values.size());
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = double(c) / n;
    entropy -= p * std::log(p);
  }
  return entropy;
}

double sample_skewness(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= double(n);
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= double(n);
  m3 /= double(n);
  if (m2 == 0.0) return 0.0;
  const double g1 = m3 / std::pow(m2, 1.5);
  // Adjusted Fisher-Pearson coefficient.
  return g1 * std::sqrt(double(n) * double(n - 1)) / double(n - 2);
}

namespace {

std::vector<double> column(const Dataset& data, std::size_t f) {
  std::vector<double> out(data.n_samples());
  for (std::size_t r = 0; r < data.n_samples(); ++r)
    out[r] = data.features(r, f);
  return out;
}

}  // namespace

FeatureShiftReport feature_shift_report(
    const Dataset& real, const Dataset& augmented,
    std::span<const std::size_t> feature_subset) {
  if (feature_subset.empty())
    throw DataError("feature_shift_report: empty feature subset");
  FeatureShiftReport report;
  double entropy_pct_sum = 0.0;
  std::size_t entropy_pct_n = 0;
  double skew_pct_sum = 0.0;
  std::size_t skew_pct_n = 0;
  for (std::size_t f : feature_subset) {
    if (f >= real.features.cols)
      throw DataError("feature_shift_report: feature index out of range");
    FeatureShift row;
    row.feature = f;
    auto before = column(real, f);
    auto after = column(augmented, f);
    row.entropy_before = histogram_entropy(before);
    row.entropy_after = histogram_entropy(after);
    row.skew_before = sample_skewness(before);
    row.skew_after = sample_skewness(after);
    if (row.entropy_before > 0.0) {
      entropy_pct_sum += 100.0 * (row.entropy_after - row.entropy_before) /
                         row.entropy_before;
      entropy_pct_n += 1;
    }
    if (std::abs(row.skew_before) > 0.0) {
      skew_pct_sum += 100.0 *
                      (std::abs(row.skew_before) - std::abs(row.skew_after)) /
                      std::abs(row.skew_before);
      skew_pct_n += 1;
    }
    report.rows.push_back(row);
  }
  report.entropy_change_pct =
      entropy_pct_n == 0 ? 0.0 : entropy_pct_sum / double(entropy_pct_n);
  report.abs_skew_reduction_pct =
      skew_pct_n == 0 ? 0.0 : skew_pct_sum / double(skew_pct_n);
  return report;
}

}  // namespace nimai
