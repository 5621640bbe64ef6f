#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nimai::nn {

// Moment-based adaptive update (Adam) with bias correction.
struct AdamState {
  std::size_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n_params = 0, double learning_rate = 1e-3)
      : lr(learning_rate), m(n_params, 0.0), v(n_params, 0.0) {}
};

// In-place parameter update. Throws TrainingError on any non-finite
// gradient, naming the offending index.
void optimizer_step(AdamState& state, std::span<double> params,
                    std::span<const double> grads);

}  // namespace nimai::nn
