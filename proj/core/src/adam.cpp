#include "fairad/adam.hpp"

#include <cmath>
#include <string>

#include "fairad/error.hpp"

namespace fairad::nn {

AdamState AdamState::for_size(std::size_t n, double learning_rate) {
  AdamState s;
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  s.learning_rate = learning_rate;
  return s;
}

AdamState AdamState::for_params(const MlpParams& params, double learning_rate) {
  return for_size(params.parameter_count(), learning_rate);
}

void adam_step(std::span<double> params, AdamState& state, std::span<const double> grads) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.first_moment.size()) + " moments");
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!std::isfinite(grads[k])) {
      throw NumericalError("adam_step: non-finite gradient at parameter index " +
                           std::to_string(k));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void adam_step(MlpParams& params, AdamState& state, const MlpParams& grads) {
  std::vector<double> flat = flatten(params);
  const std::vector<double> g = flatten(grads);
  adam_step(std::span<double>(flat), state, std::span<const double>(g));
  assign_flat(params, flat);
}

}  // namespace fairad::nn
