#pragma once

#include <cstdint>
#include <utility>

#include "nimai/dataset.hpp"

namespace nimai {

// Two-way split preserving per-class proportions within one sample.
// Every class must have at least 2 samples; each side receives at least one
// row of every class. Pure function of (data, fraction, seed); row order
// within each side follows the input.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                             double first_fraction,
                                             std::uint64_t seed);

// Caps the dataset at `cap` rows, keeping class proportions within one
// sample (largest-remainder apportionment). Returns the input unchanged
// when it is already small enough.
Dataset stratified_subsample(const Dataset& data, std::size_t cap,
                             std::uint64_t seed);

}  // namespace nimai
