#include "nimai/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace nimai {

Normalizer fit_normalizer(const Dataset& train) {
  if (train.n_samples() == 0) throw DataError("fit_normalizer: empty dataset");
  const std::size_t f = train.features.cols;
  Normalizer n;
  n.min.assign(f, 0.0);
  n.max.assign(f, 0.0);
  for (std::size_t c = 0; c < f; ++c) {
    double lo = train.features(0, c), hi = lo;
    for (std::size_t r = 1; r < train.features.rows; ++r) {
      lo = std::min(lo, train.features(r, c));
      hi = std::max(hi, train.features(r, c));
    }
    n.min[c] = lo;
    n.max[c] = hi;
  }
  return n;
}

Dataset apply_normalizer(const Normalizer& norm, const Dataset& data) {
  if (norm.n_features() != data.features.cols)
    throw DataError("apply_normalizer: feature count mismatch");
  Dataset out = data;
  for (std::size_t c = 0; c < data.features.cols; ++c) {
    const double lo = norm.min[c];
    const double range = norm.max[c] - lo;
    for (std::size_t r = 0; r < data.features.rows; ++r) {
      double v = range == 0.0 ? 0.0 : (data.features(r, c) - lo) / range;
      out.features(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

Dataset invert_normalizer(const Normalizer& norm, const Dataset& data) {
  if (norm.n_features() != data.features.cols)
    throw DataError("invert_normalizer: feature count mismatch");
  Dataset out = data;
  const auto& int_flags = data.schema.integer_features;
  for (std::size_t c = 0; c < data.features.cols; ++c) {
    const double lo = norm.min[c];
    const double range = norm.max[c] - lo;
    const bool as_int = !int_flags.empty() && int_flags[c];
    for (std::size_t r = 0; r < data.features.rows; ++r) {
      double v = lo + data.features(r, c) * range;
      out.features(r, c) = as_int ? std::round(v) : v;
    }
  }
  return out;
}

void save_normalizer(const std::filesystem::path& path, const Normalizer& n) {
  nlohmann::json j;
  j["format"] = "nimai-normalizer";
  j["version"] = 1;
  j["min"] = n.min;
  j["max"] = n.max;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write normalizer: " + path.string());
  out << j.dump(2) << '\n';
}

Normalizer load_normalizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open normalizer: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("normalizer parse error: " + std::string(e.what()));
  }
  if (j.value("format", "") != "nimai-normalizer" || j.value("version", 0) != 1)
    throw DataError("unrecognized normalizer file: " + path.string());
  Normalizer n;
  n.min = j.at("min").get<std::vector<double>>();
  n.max = j.at("max").get<std::vector<double>>();
  if (n.min.size() != n.max.size())
    throw DataError("normalizer min/max length mismatch");
  for (std::size_t i = 0; i < n.min.size(); ++i)
    if (n.max[i] < n.min[i])
      throw DataError("normalizer has max < min at feature " +
                      std::to_string(i));
  return n;
}

}  // namespace nimai
