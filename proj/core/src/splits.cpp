#include "nimai/splits.hpp"

#include <algorithm>
#include <cmath>

#include "nimai/rng.hpp"

namespace nimai {

namespace {

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.schema = data.schema;
  out.features = Mat(rows.size(), data.features.cols);
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = data.features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels[i] = data.labels[rows[i]];
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                             double first_fraction,
                                             std::uint64_t seed) {
  data.validate();
  if (first_fraction <= 0.0 || first_fraction >= 1.0)
    throw DataError("stratified_split: fraction must be in (0,1)");
  RngStream rng = RngStream(seed).child("stratified-split");

  std::vector<std::size_t> first_rows, second_rows;
  for (int c = 0; c < int(data.schema.n_classes()); ++c) {
    auto members = rows_of_class(data, c);
    if (members.size() < 2)
      throw DataError("stratified_split: class " +
                      data.schema.class_names[std::size_t(c)] +
                      " has fewer samples than splits");
    rng.shuffle(members);
    auto want = std::size_t(std::llround(first_fraction * double(members.size())));
    want = std::clamp<std::size_t>(want, 1, members.size() - 1);
    first_rows.insert(first_rows.end(), members.begin(),
                      members.begin() + std::ptrdiff_t(want));
    second_rows.insert(second_rows.end(),
                       members.begin() + std::ptrdiff_t(want), members.end());
  }
  std::sort(first_rows.begin(), first_rows.end());
  std::sort(second_rows.begin(), second_rows.end());
  return {take_rows(data, first_rows), take_rows(data, second_rows)};
}

Dataset stratified_subsample(const Dataset& data, std::size_t cap,
                             std::uint64_t seed) {
  data.validate();
  const std::size_t n_classes = data.schema.n_classes();
  if (cap < n_classes)
    throw DataError("stratified_subsample: cap below class count");
  if (data.n_samples() <= cap) return data;

  // Largest-remainder apportionment of `cap` over class proportions.
  const double n = double(data.n_samples());
  auto counts = data.class_counts();
  std::vector<std::size_t> quota(n_classes, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    double exact = double(cap) * double(counts[c]) / n;
    quota[c] = std::size_t(std::floor(exact));
    assigned += quota[c];
    remainders.push_back({exact - std::floor(exact), c});
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < cap; ++i, ++assigned)
    quota[remainders[i % remainders.size()].second]++;

  RngStream rng = RngStream(seed).child("stratified-subsample");
  std::vector<std::size_t> keep;
  for (int c = 0; c < int(n_classes); ++c) {
    auto members = rows_of_class(data, c);
    rng.shuffle(members);
    members.resize(std::min(quota[std::size_t(c)], members.size()));
    keep.insert(keep.end(), members.begin(), members.end());
  }
  std::sort(keep.begin(), keep.end());
  return take_rows(data, keep);
}

}  // namespace nimai
