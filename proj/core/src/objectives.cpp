#include "fairad/objectives.hpp"

#include <cmath>
#include <string>

#include "fairad/error.hpp"
#include "fairad/mmd.hpp"
#include "fairad/target.hpp"

namespace fairad::model {

namespace {

struct DivergenceTerm {
  double value = 0.0;
  double transport_cost = 0.0;
  bool converged = true;
  Matrix grad;  // w.r.t. the embedded points
};

DivergenceTerm divergence_to_target(const Matrix& embedded, const Matrix& target,
                                    const DivergenceConfig& cfg) {
  DivergenceTerm t;
  if (cfg.kind == DivergenceKind::Sinkhorn) {
    auto r = ot::sinkhorn_distance(embedded, target, cfg.sinkhorn);
    t.value = r.value;
    t.transport_cost = r.transport_cost;
    t.converged = r.plan.converged;
    t.grad = std::move(r.grad_x);
  } else {
    const double gamma =
        cfg.mmd_gamma > 0.0 ? cfg.mmd_gamma : ot::median_heuristic_gamma(embedded, target);
    auto r = ot::mmd_squared_with_grad(embedded, target, gamma);
    t.value = r.value;
    t.transport_cost = r.value;
    t.grad = std::move(r.grad_x);
  }
  return t;
}

// Adds beta/n |x - g(e)|^2 to the loss; returns its gradient w.r.t. e.
Matrix reconstruction_term(const Matrix& x, const Matrix& embedded, const nn::MlpParams& decoder,
                           double beta, LossResult& out) {
  auto fwd = nn::mlp_forward(decoder, embedded);
  if (fwd.output.cols() != x.cols()) {
    throw ShapeError("decoder output " + fwd.output.shape_string() + " vs input " +
                     x.shape_string());
  }
  const double n = static_cast<double>(x.rows());
  Matrix upstream(x.rows(), x.cols());
  double sq = 0.0;
  auto r = fwd.output.data();
  auto xs = x.data();
  auto up = upstream.data();
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double diff = r[k] - xs[k];
    sq += diff * diff;
    up[k] = 2.0 * beta / n * diff;
  }
  out.parts.reconstruction = beta / n * sq;
  auto back = nn::mlp_backward(decoder, fwd.cache, upstream);
  out.decoder_grad = std::move(back.param_grads);
  return std::move(back.input_grads);
}

void add_rows(Matrix& dst, std::size_t offset, const Matrix& src) {
  for (std::size_t i = 0; i < src.rows(); ++i) {
    auto d = dst.row(offset + i);
    auto s = src.row(i);
    for (std::size_t k = 0; k < s.size(); ++k) d[k] += s[k];
  }
}

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
}

}  // namespace

LossResult im_fairad_loss(std::span<const Matrix> groups, std::span<const Matrix> targets,
                          const nn::MlpParams& encoder, const nn::MlpParams& decoder,
                          double beta, const DivergenceConfig& divergence) {
  if (groups.empty()) throw DataError("im_fairad_loss: no groups");
  if (targets.size() != groups.size()) {
    throw ShapeError("im_fairad_loss: " + std::to_string(groups.size()) + " groups but " +
                     std::to_string(targets.size()) + " target samples");
  }
  for (std::size_t s = 0; s < groups.size(); ++s) {
    if (groups[s].rows() == 0) throw DataError("im_fairad_loss: group " + std::to_string(s) + " is empty");
    if (targets[s].rows() == 0) {
      throw DataError("im_fairad_loss: target sample for group " + std::to_string(s) + " is empty");
    }
  }
  const Matrix x = vstack(groups);
  auto enc = nn::mlp_forward(encoder, x);
  const Matrix& e = enc.output;

  LossResult out;
  Matrix grad_e(e.rows(), e.cols());
  std::size_t offset = 0;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    std::vector<std::size_t> idx(groups[s].rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = offset + i;
    const Matrix es = e.gather_rows(idx);
    auto term = divergence_to_target(es, targets[s], divergence);
    out.parts.sinkhorn_total += term.value;
    out.parts.group_transport_cost.push_back(term.transport_cost);
    out.parts.sinkhorn_converged = out.parts.sinkhorn_converged && term.converged;
    add_rows(grad_e, offset, term.grad);
    offset += groups[s].rows();
  }
  add_into(grad_e, reconstruction_term(x, e, decoder, beta, out));
  out.encoder_grad = nn::mlp_backward(encoder, enc.cache, grad_e).param_grads;
  out.loss = out.parts.total();
  return out;
}

LossResult ex_fairad_loss(const Matrix& x, std::span<const int> group_index, const Matrix& target,
                          const nn::MlpParams& encoder, const nn::MlpParams& decoder,
                          double beta, double lambda, const DivergenceConfig& divergence) {
  if (group_index.size() != x.rows()) {
    throw ShapeError("ex_fairad_loss: " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(group_index.size()) + " group ids");
  }
  int k = 0;
  for (int g : group_index) {
    if (g < 0) throw DataError("ex_fairad_loss: negative group id");
    k = std::max(k, g + 1);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < group_index.size(); ++i) {
    members[static_cast<std::size_t>(group_index[i])].push_back(i);
  }
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].empty()) throw DataError("ex_fairad_loss: group " + std::to_string(s) + " is empty");
  }
  if (members.size() < 2) throw DataError("ex_fairad_loss: needs at least 2 groups");
  if (target.rows() == 0) throw DataError("ex_fairad_loss: target sample is empty");

  auto enc = nn::mlp_forward(encoder, x);
  const Matrix& e = enc.output;
  LossResult out;

  auto term = divergence_to_target(e, target, divergence);
  out.parts.sinkhorn_total = term.value;
  out.parts.group_transport_cost.push_back(term.transport_cost);
  out.parts.sinkhorn_converged = term.converged;
  Matrix grad_e = std::move(term.grad);

  add_into(grad_e, reconstruction_term(x, e, decoder, beta, out));

  if (lambda != 0.0) {
    const std::vector<double> norms = anomaly_score(e);
    std::vector<double> grad_norm(norms.size(), 0.0);
    for (std::size_t s = 0; s < members.size(); ++s) {
      for (std::size_t t = s + 1; t < members.size(); ++t) {
        std::vector<double> a, b;
        for (auto i : members[s]) a.push_back(norms[i]);
        for (auto i : members[t]) b.push_back(norms[i]);
        auto r = ot::sinkhorn_distance_1d(a, b, divergence.sinkhorn);
        out.parts.fairness_term += lambda * r.value;
        out.parts.fairness_transport_cost += r.transport_cost;
        out.parts.sinkhorn_converged = out.parts.sinkhorn_converged && r.converged;
        for (std::size_t q = 0; q < a.size(); ++q) grad_norm[members[s][q]] += lambda * r.grad_x[q];
        for (std::size_t q = 0; q < b.size(); ++q) grad_norm[members[t][q]] += lambda * r.grad_y[q];
      }
    }
    for (std::size_t i = 0; i < e.rows(); ++i) {
      if (norms[i] == 0.0 || grad_norm[i] == 0.0) continue;
      const double c = grad_norm[i] / norms[i];
      auto gi = grad_e.row(i);
      auto ei = e.row(i);
      for (std::size_t d = 0; d < gi.size(); ++d) gi[d] += c * ei[d];
    }
  }

  out.encoder_grad = nn::mlp_backward(encoder, enc.cache, grad_e).param_grads;
  out.loss = out.parts.total();
  return out;
}

}  // namespace fairad::model
