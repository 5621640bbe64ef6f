#include "nimai/toygen.hpp"

#include <algorithm>
#include <cmath>

#include "nimai/rng.hpp"

namespace nimai {

Schema make_toy_schema(std::size_t n_features, std::size_t n_classes) {
  Schema s;
  for (std::size_t f = 0; f < n_features; ++f)
    s.feature_names.push_back("f" + std::to_string(f));
  s.label_name = "label";
  for (std::size_t c = 0; c < n_classes; ++c)
    s.class_names.push_back("c" + std::to_string(c));
  s.validate();
  return s;
}

Dataset make_gaussian_dataset(const Schema& schema,
                              const std::vector<GaussianClusterSpec>& clusters,
                              std::uint64_t seed) {
  if (clusters.empty()) throw ConfigError("toygen: no clusters");
  std::size_t total = 0;
  for (const auto& c : clusters) {
    if (c.mean.size() != schema.n_features())
      throw ConfigError("toygen: cluster mean width mismatch");
    if (c.label < 0 || std::size_t(c.label) >= schema.n_classes())
      throw ConfigError("toygen: cluster label out of range");
    total += c.count;
  }
  Dataset out;
  out.schema = schema;
  out.features = Mat(total, schema.n_features());
  out.labels.reserve(total);
  RngStream rng = RngStream(seed).child("toygen");
  std::size_t row = 0;
  for (const auto& c : clusters) {
    for (std::size_t i = 0; i < c.count; ++i, ++row) {
      for (std::size_t f = 0; f < schema.n_features(); ++f)
        out.features(row, f) =
            std::clamp(c.mean[f] + c.sigma * rng.normal(), 0.0, 1.0);
      out.labels.push_back(c.label);
    }
  }
  out.validate();
  return out;
}

DriftScenario make_drift_scenario(const ToyDriftSpec& spec,
                                  std::uint64_t seed) {
  if (spec.n_months < 2) throw ConfigError("toygen: need >= 2 months");
  if (spec.drift_month < 1 || spec.drift_month >= spec.n_months)
    throw ConfigError("toygen: drift month out of range");
  Schema schema = make_toy_schema(spec.n_features, 2);
  RngStream root(seed);

  DriftScenario scenario;
  scenario.train_month = 0;
  const auto n_minority =
      std::size_t(std::llround(spec.minority_fraction *
                               double(spec.rows_per_month)));
  for (std::size_t m = 0; m < spec.n_months; ++m) {
    const double minority_center =
        m >= spec.drift_month ? spec.minority_center + spec.drift_shift
                              : spec.minority_center;
    GaussianClusterSpec majority{
        std::vector<double>(spec.n_features, spec.majority_center),
        spec.sigma, spec.rows_per_month - n_minority, 0};
    GaussianClusterSpec minority{
        std::vector<double>(spec.n_features, minority_center), spec.sigma,
        n_minority, 1};
    scenario.months.push_back(make_gaussian_dataset(
        schema, {majority, minority}, root.child("month", m).root()));
  }
  scenario.validate();
  return scenario;
}

}  // namespace nimai
