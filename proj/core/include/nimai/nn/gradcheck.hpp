#pragma once

#include <functional>

#include "nimai/nn/params.hpp"

namespace nimai::nn {

// Central finite-difference verification of analytic gradients.
// `loss` evaluates the scalar objective at the store's current values;
// `compute_grads` must zero the store's gradients and refill them
// analytically. Returns max over parameters of
// |analytic - numeric| / max(1e-8, |numeric|).
double finite_diff_check(ParamStore& params,
                         const std::function<double()>& loss,
                         const std::function<void()>& compute_grads,
                         double eps);

// Same check restricted to flat indices [begin, end); used when part of
// the store is intentionally outside the differentiated path.
double finite_diff_check_range(ParamStore& params,
                               const std::function<double()>& loss,
                               const std::function<void()>& compute_grads,
                               double eps, std::size_t begin,
                               std::size_t end);

}  // namespace nimai::nn
