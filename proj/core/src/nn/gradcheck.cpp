#include "nimai/nn/gradcheck.hpp"

#include <cmath>

#include "nimai/common.hpp"

namespace nimai::nn {

double finite_diff_check_range(ParamStore& params,
                               const std::function<double()>& loss,
                               const std::function<void()>& compute_grads,
                               double eps, std::size_t begin,
                               std::size_t end) {
  if (eps <= 0.0) throw ConfigError("finite_diff_check: eps must be > 0");
  compute_grads();
  const std::vector<double> analytic = params.flat_grads();
  auto& values = params.flat_values();
  end = std::min(end, values.size());
  double worst = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double up = loss();
    values[i] = saved - eps;
    const double down = loss();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double rel =
        std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

double finite_diff_check(ParamStore& params,
                         const std::function<double()>& loss,
                         const std::function<void()>& compute_grads,
                         double eps) {
  return finite_diff_check_range(params, loss, compute_grads, eps, 0,
                                 std::size_t(-1));
}

}  // namespace nimai::nn
