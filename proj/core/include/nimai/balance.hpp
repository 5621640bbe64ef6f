#pragma once

#include <cstddef>
#include <map>

namespace nimai {

// Synthetic sample quota per class: every class is topped up to the size of
// the largest class, so the largest class always maps to 0.
struct BalancePlan {
  std::map<int, std::size_t> synthetic_counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (auto& [c, n] : synthetic_counts) t += n;
    return t;
  }
};

BalancePlan plan_balance(const std::map<int, std::size_t>& class_counts);

}  // namespace nimai
