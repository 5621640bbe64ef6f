#include "nimai/dataset.hpp"

#include <algorithm>
#include <set>

namespace nimai {

int Schema::class_id(const std::string& name) const {
  auto it = std::find(class_names.begin(), class_names.end(), name);
  return it == class_names.end() ? -1 : int(it - class_names.begin());
}

void Schema::validate() const {
  if (feature_names.empty()) throw DataError("schema: no feature columns");
  std::set<std::string> uniq(feature_names.begin(), feature_names.end());
  if (uniq.size() != feature_names.size())
    throw DataError("schema: duplicate feature names");
  if (class_names.size() < 2)
    throw DataError("schema: need at least 2 classes");
  if (label_name.empty()) throw DataError("schema: empty label name");
  if (!integer_features.empty() &&
      integer_features.size() != feature_names.size())
    throw DataError("schema: integer_features length mismatch");
}

std::uint64_t Schema::hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& f : feature_names) h = fnv1a(f, fnv1a("|", h));
  h = fnv1a(label_name, fnv1a("#", h));
  for (const auto& c : class_names) h = fnv1a(c, fnv1a("|", h));
  return h;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(schema.n_classes(), 0);
  for (int l : labels) counts.at(std::size_t(l))++;
  return counts;
}

void Dataset::validate() const {
  schema.validate();
  if (features.rows != labels.size())
    throw DataError("dataset: feature rows do not match label count");
  if (features.cols != schema.n_features())
    throw DataError("dataset: feature columns do not match schema");
  if (labels.empty()) throw DataError("dataset: empty");
  for (int l : labels)
    if (l < 0 || std::size_t(l) >= schema.n_classes())
      throw DataError("dataset: label id out of range");
}

std::vector<std::size_t> rows_of_class(const Dataset& data, int c) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n_samples(); ++i)
    if (data.labels[i] == c) rows.push_back(i);
  return rows;
}

Dataset concat(const Dataset& head, const Mat& tail_features,
               const std::vector<int>& tail_labels) {
  if (tail_features.rows != tail_labels.size())
    throw DataError("concat: tail rows do not match tail labels");
  if (tail_features.rows > 0 && tail_features.cols != head.features.cols)
    throw DataError("concat: feature width mismatch");
  Dataset out;
  out.schema = head.schema;
  out.features = Mat(head.features.rows + tail_features.rows,
                     head.features.cols);
  std::copy(head.features.a.begin(), head.features.a.end(),
            out.features.a.begin());
  std::copy(tail_features.a.begin(), tail_features.a.end(),
            out.features.a.begin() + std::ptrdiff_t(head.features.a.size()));
  out.labels = head.labels;
  out.labels.insert(out.labels.end(), tail_labels.begin(), tail_labels.end());
  return out;
}

}  // namespace nimai
