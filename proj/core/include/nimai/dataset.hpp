#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nimai/common.hpp"
#include "nimai/matrix.hpp"

namespace nimai {

struct Schema {
  std::vector<std::string> feature_names;
  std::string label_name;
  std::vector<std::string> class_names;
  // Features flagged here are rounded to the nearest integer on
  // denormalized export. Empty means no integer features.
  std::vector<bool> integer_features;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_classes() const { return class_names.size(); }

  int class_id(const std::string& name) const;
  void validate() const;
  std::uint64_t hash() const;
};

struct Dataset {
  Mat features;             // n_samples x n_features
  std::vector<int> labels;  // class ids in [0, n_classes)
  Schema schema;

  std::size_t n_samples() const { return labels.size(); }
  std::vector<std::size_t> class_counts() const;
  void validate() const;
};

// Row indices belonging to class c, in dataset order.
std::vector<std::size_t> rows_of_class(const Dataset& data, int c);

// Concatenation keeping `head` rows first. Schemas must match.
Dataset concat(const Dataset& head, const Mat& tail_features,
               const std::vector<int>& tail_labels);

}  // namespace nimai
