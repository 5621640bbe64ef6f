#include "nimai/balance.hpp"

#include <algorithm>

#include "nimai/common.hpp"

namespace nimai {

BalancePlan plan_balance(const std::map<int, std::size_t>& class_counts) {
  if (class_counts.empty()) throw DataError("plan_balance: no classes");
  std::size_t largest = 0;
  for (auto& [c, n] : class_counts) {
    if (n == 0) throw DataError("plan_balance: empty class " + std::to_string(c));
    largest = std::max(largest, n);
  }
  BalancePlan plan;
  for (auto& [c, n] : class_counts) plan.synthetic_counts[c] = largest - n;
  return plan;
}

}  // namespace nimai
