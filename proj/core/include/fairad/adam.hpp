#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairad/mlp.hpp"

namespace fairad::nn {

struct AdamState {
  std::size_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(std::size_t n, double learning_rate = 1e-3);
  static AdamState for_params(const MlpParams& params, double learning_rate = 1e-3);
};

/// One bias-corrected Adam update applied in place. Throws NumericalError on a
/// non-finite gradient (message names the flat index) before touching anything.
void adam_step(std::span<double> params, AdamState& state, std::span<const double> grads);

/// Same update on network parameters; gradients have the network's shapes.
void adam_step(MlpParams& params, AdamState& state, const MlpParams& grads);

}  // namespace fairad::nn
