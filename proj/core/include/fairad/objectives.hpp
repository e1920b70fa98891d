#pragma once

#include <span>
#include <vector>

#include "fairad/matrix.hpp"
#include "fairad/mlp.hpp"
#include "fairad/sinkhorn.hpp"

namespace fairad::model {

enum class DivergenceKind { Sinkhorn, Mmd };

/// Divergence used for the embedding-to-target terms. The score-distribution
/// term of the explicit variant is always Sinkhorn.
struct DivergenceConfig {
  DivergenceKind kind = DivergenceKind::Sinkhorn;
  ot::SinkhornConfig sinkhorn{};
  double mmd_gamma = 0.0;  // <= 0 selects the median heuristic per call
};

struct LossParts {
  double sinkhorn_total = 0.0;   // divergence terms to the target (sum over groups for Im)
  double reconstruction = 0.0;   // beta/n * sum |x - g(h(x))|^2
  double fairness_term = 0.0;    // lambda * pairwise score transport (Ex only)
  std::vector<double> group_transport_cost;  // <P, C> per group (Im) or pooled (Ex)
  double fairness_transport_cost = 0.0;      // sum of <P, C> over score-distribution pairs (Ex)
  bool sinkhorn_converged = true;

  double total() const { return sinkhorn_total + reconstruction + fairness_term; }
};

struct LossResult {
  double loss = 0.0;
  LossParts parts;
  nn::MlpParams encoder_grad;
  nn::MlpParams decoder_grad;
};

/// Implicit variant:
///   sum_s D(h(X_s), Z_s) + beta/n sum_i |x_i - g(h(x_i))|^2
/// with one target sample per group (targets[s].rows() need not equal
/// groups[s].rows() but usually does).
LossResult im_fairad_loss(std::span<const Matrix> groups, std::span<const Matrix> targets,
                          const nn::MlpParams& encoder, const nn::MlpParams& decoder,
                          double beta, const DivergenceConfig& divergence);

/// Explicit variant:
///   D(h(X), Z) + beta/n sum_i |x_i - g(h(x_i))|^2
///   + lambda * sum_{s<t} Sinkhorn(|h(X_s)|, |h(X_t)|)
/// where |.| maps each embedding to its norm. group_index holds dense ids.
LossResult ex_fairad_loss(const Matrix& x, std::span<const int> group_index, const Matrix& target,
                          const nn::MlpParams& encoder, const nn::MlpParams& decoder,
                          double beta, double lambda, const DivergenceConfig& divergence);

}  // namespace fairad::model
