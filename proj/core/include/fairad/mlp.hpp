#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fairad/matrix.hpp"

namespace fairad::nn {

enum class Activation { ReLU, Tanh, Identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct Layer {
  Matrix weight;              // out x in
  std::vector<double> bias;   // out
  Activation activation = Activation::Identity;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  bool operator==(const Layer&) const = default;
};

/// Feed-forward network: a chain of affine maps each followed by an activation.
struct MlpParams {
  std::vector<Layer> layers;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;

  /// Throws ShapeError if adjacent layer dims do not chain.
  void validate() const;

  /// Same shapes, all entries zero. Used as a gradient accumulator.
  MlpParams zeros_like() const;

  bool operator==(const MlpParams&) const = default;
};

/// Builds a network with the given layer widths (widths.front() = input dim).
/// Hidden layers use `hidden`, the last layer `output`. Weights and biases are
/// drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
MlpParams make_mlp(std::span<const std::size_t> widths, std::uint64_t seed,
                   Activation hidden = Activation::ReLU,
                   Activation output = Activation::Identity);

struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> pre;          // affine output of each layer, before activation
  std::vector<Matrix> post;         // activation output of each layer
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

ForwardResult mlp_forward(const MlpParams& params, const Matrix& batch);

/// Forward pass without keeping the cache.
Matrix mlp_apply(const MlpParams& params, const Matrix& batch);

struct BackwardResult {
  MlpParams param_grads;
  Matrix input_grads;
};

/// Gradients of sum(upstream .* output) with respect to every weight, bias
/// and input row.
BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& upstream);

/// Parameters in a fixed order: layer by layer, weight (row-major) then bias.
std::vector<double> flatten(const MlpParams& params);
void assign_flat(MlpParams& params, std::span<const double> flat);

/// params += scale * other (same shapes).
void axpy(MlpParams& params, double scale, const MlpParams& other);

}  // namespace fairad::nn
