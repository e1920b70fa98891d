#include "fairad/finite_diff.hpp"

#include <cmath>
#include <string>

#include "fairad/error.hpp"

namespace fairad::nn {

std::vector<double> finite_diff_grad(const ScalarLoss& loss, std::span<const double> params,
                                     double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff_grad: eps must be positive");
  std::vector<double> theta(params.begin(), params.end());
  if (!std::isfinite(loss(theta))) throw NumericalError("finite_diff_grad: loss is not finite");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + eps;
    const double up = loss(theta);
    theta[i] = saved - eps;
    const double down = loss(theta);
    theta[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_diff_grad: loss not finite when perturbing coordinate " +
                           std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace fairad::nn
