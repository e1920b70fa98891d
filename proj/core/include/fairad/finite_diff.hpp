#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fairad::nn {

using ScalarLoss = std::function<double(std::span<const double>)>;

/// Central-difference gradient: (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
/// Throws NumericalError if the loss is non-finite at any evaluated point.
std::vector<double> finite_diff_grad(const ScalarLoss& loss, std::span<const double> params,
                                     double eps);

}  // namespace fairad::nn
