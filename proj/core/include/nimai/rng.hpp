#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "nimai/common.hpp"

namespace nimai {

// Named, hierarchical random streams. A stream is identified by its root
// seed; children are derived from (root, name, index) only, never from how
// much the parent has consumed, so adding a consumer never perturbs others.
//
// All draws are implemented on top of raw 64-bit outputs rather than
// std::uniform_real_distribution and friends, keeping sequences identical
// across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : root_(seed), state_(mix(seed)) {}

  RngStream child(std::string_view name) const {
    return RngStream(mix(fnv1a(name, fnv1a_u64(root_, kFnvOffset))));
  }
  RngStream child(std::string_view name, std::uint64_t index) const {
    return RngStream(
        mix(fnv1a_u64(index, fnv1a(name, fnv1a_u64(root_, kFnvOffset)))));
  }

  std::uint64_t root() const { return root_; }

  std::uint64_t next_u64() {
    // splitmix64: tiny state, full 64-bit output, no library variance.
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t integer(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(integer(n));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn from [0, n) via partial Fisher-Yates.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  static std::uint64_t mix(std::uint64_t v) {
    v ^= v >> 33;
    v *= 0xff51afd7ed558ccdull;
    v ^= v >> 33;
    v *= 0xc4ceb9fe1a85ec53ull;
    v ^= v >> 33;
    return v;
  }

  std::uint64_t root_;
  std::uint64_t state_;
};

inline std::vector<std::size_t> RngStream::sample_without_replacement(
    std::size_t n, std::size_t k) {
  if (k > n) k = n;
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace nimai
