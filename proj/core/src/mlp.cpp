#include "fairad/mlp.hpp"

#include <cmath>
#include <string>

#include "fairad/error.hpp"
#include "fairad/rng.hpp"

namespace fairad::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpParams::in_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

std::size_t MlpParams::out_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.out_dim()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length " +
                       std::to_string(l.bias.size()) + " vs weight " + l.weight.shape_string());
    }
    if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
      throw ShapeError("layer " + std::to_string(i) + " expects input dim " +
                       std::to_string(l.in_dim()) + " but layer " + std::to_string(i - 1) +
                       " outputs " + std::to_string(layers[i - 1].out_dim()));
    }
  }
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back(Layer{Matrix(l.weight.rows(), l.weight.cols()),
                             std::vector<double>(l.bias.size(), 0.0), l.activation});
  }
  return z;
}

MlpParams make_mlp(std::span<const std::size_t> widths, std::uint64_t seed, Activation hidden,
                   Activation output) {
  if (widths.size() < 2) throw ConfigError("make_mlp needs at least input and output widths");
  Rng rng(seed);
  MlpParams p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    if (in == 0 || out == 0) throw ConfigError("make_mlp: zero layer width");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer{Matrix(out, in), std::vector<double>(out), i + 2 == widths.size() ? output : hidden};
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

void activate(Activation a, const Matrix& pre, Matrix& post) {
  auto src = pre.data();
  auto dst = post.data();
  switch (a) {
    case Activation::ReLU:
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] > 0.0 ? src[k] : 0.0;
      break;
    case Activation::Tanh:
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] = std::tanh(src[k]);
      break;
    case Activation::Identity:
      std::copy(src.begin(), src.end(), dst.begin());
      break;
  }
}

Matrix affine(const Layer& layer, const Matrix& input) {
  const std::size_t n = input.rows();
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  Matrix pre(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = input.row(i).data();
    double* y = pre.row(i).data();
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = layer.weight.row(o).data();
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < in; ++k) acc += w[k] * x[k];
      y[o] = acc;
    }
  }
  return pre;
}

void check_input(const MlpParams& params, const Matrix& batch) {
  params.validate();
  if (batch.cols() != params.in_dim()) {
    throw ShapeError("mlp input has shape " + batch.shape_string() + " but first layer weight is " +
                     params.layers.front().weight.shape_string() + " (expects " +
                     std::to_string(params.in_dim()) + " columns)");
  }
}

}  // namespace

ForwardResult mlp_forward(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  ForwardResult r;
  r.cache.inputs.reserve(params.layers.size());
  r.cache.pre.reserve(params.layers.size());
  r.cache.post.reserve(params.layers.size());
  const Matrix* current = &batch;
  for (const auto& layer : params.layers) {
    r.cache.inputs.push_back(*current);
    Matrix pre = affine(layer, *current);
    Matrix post(pre.rows(), pre.cols());
    activate(layer.activation, pre, post);
    r.cache.pre.push_back(std::move(pre));
    r.cache.post.push_back(std::move(post));
    current = &r.cache.post.back();
  }
  r.output = r.cache.post.back();
  return r;
}

Matrix mlp_apply(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  Matrix current = batch;
  for (const auto& layer : params.layers) {
    Matrix pre = affine(layer, current);
    Matrix post(pre.rows(), pre.cols());
    activate(layer.activation, pre, post);
    current = std::move(post);
  }
  return current;
}

BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& upstream) {
  params.validate();
  const std::size_t depth = params.layers.size();
  if (cache.inputs.size() != depth || cache.pre.size() != depth || cache.post.size() != depth) {
    throw ShapeError("stale forward cache: " + std::to_string(cache.pre.size()) +
                     " cached layers for a " + std::to_string(depth) + "-layer network");
  }
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = params.layers[l];
    if (cache.inputs[l].cols() != layer.in_dim() || cache.pre[l].cols() != layer.out_dim() ||
        cache.pre[l].rows() != cache.inputs[l].rows()) {
      throw ShapeError("stale forward cache at layer " + std::to_string(l) + ": cached " +
                       cache.inputs[l].shape_string() + " -> " + cache.pre[l].shape_string() +
                       ", weight " + layer.weight.shape_string());
    }
  }
  const Matrix& out = cache.post.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ShapeError("upstream gradient " + upstream.shape_string() + " vs network output " +
                     out.shape_string());
  }

  BackwardResult r{params.zeros_like(), Matrix()};
  Matrix grad = upstream;  // gradient w.r.t. post-activation of layer l
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = params.layers[l];
    const Matrix& pre = cache.pre[l];
    const Matrix& post = cache.post[l];
    const Matrix& input = cache.inputs[l];
    const std::size_t n = pre.rows();
    const std::size_t in = layer.in_dim();
    const std::size_t outd = layer.out_dim();

    auto g = grad.data();
    switch (layer.activation) {
      case Activation::ReLU: {
        auto p = pre.data();
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (!(p[k] > 0.0)) g[k] = 0.0;
        }
        break;
      }
      case Activation::Tanh: {
        auto p = post.data();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] *= 1.0 - p[k] * p[k];
        break;
      }
      case Activation::Identity:
        break;
    }

    Layer& gl = r.param_grads.layers[l];
    Matrix next(n, in);
    for (std::size_t i = 0; i < n; ++i) {
      const double* gi = grad.row(i).data();
      const double* xi = input.row(i).data();
      double* ni = next.row(i).data();
      for (std::size_t o = 0; o < outd; ++o) {
        const double go = gi[o];
        if (go == 0.0) continue;
        gl.bias[o] += go;
        double* gw = gl.weight.row(o).data();
        const double* w = layer.weight.row(o).data();
        for (std::size_t k = 0; k < in; ++k) {
          gw[k] += go * xi[k];
          ni[k] += go * w[k];
        }
      }
    }
    grad = std::move(next);
  }
  r.input_grads = std::move(grad);
  return r;
}

std::vector<double> flatten(const MlpParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    flat.insert(flat.end(), l.weight.data().begin(), l.weight.data().end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void assign_flat(MlpParams& params, std::span<const double> flat) {
  if (flat.size() != params.parameter_count()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, network has " + std::to_string(params.parameter_count()));
  }
  std::size_t k = 0;
  for (auto& l : params.layers) {
    for (double& w : l.weight.data()) w = flat[k++];
    for (double& b : l.bias) b = flat[k++];
  }
}

void axpy(MlpParams& params, double scale, const MlpParams& other) {
  if (params.layers.size() != other.layers.size()) throw ShapeError("axpy: depth mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& a = params.layers[l];
    const auto& b = other.layers[l];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size()) {
      throw ShapeError("axpy: layer " + std::to_string(l) + " shape " + a.weight.shape_string() +
                       " vs " + b.weight.shape_string());
    }
    auto aw = a.weight.data();
    auto bw = b.weight.data();
    for (std::size_t k = 0; k < aw.size(); ++k) aw[k] += scale * bw[k];
    for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += scale * b.bias[k];
  }
}

}  // namespace fairad::nn
