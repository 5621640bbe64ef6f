#include "nimai/nn/adam.hpp"

#include <cmath>
#include <string>

#include "nimai/common.hpp"

namespace nimai::nn {

void optimizer_step(AdamState& state, std::span<double> params,
                    std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw TrainingError("optimizer_step: shape mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i]))
      throw TrainingError("optimizer_step: non-finite gradient at index " +
                          std::to_string(i) + " (step " +
                          std::to_string(state.step + 1) + ")");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace nimai::nn
