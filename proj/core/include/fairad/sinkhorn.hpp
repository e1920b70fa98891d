#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fairad/matrix.hpp"

namespace fairad::ot {

struct SinkhornConfig {
  double alpha = 0.1;        // entropy coefficient
  std::size_t max_iter = 500;
  double tol = 1e-6;         // max-norm marginal residual

  void validate() const;
};

struct TransportPlan {
  Matrix plan;
  std::vector<double> row_marginal;
  std::vector<double> col_marginal;
  double objective = 0.0;       // <P, C> + alpha * sum P log P
  double transport_cost = 0.0;  // <P, C>
  std::size_t iterations_used = 0;
  bool converged = false;
  double row_residual = 0.0;
  double col_residual = 0.0;
};

/// Squared Euclidean cost C_ij = |x_i - y_j|^2.
Matrix cost_matrix(const Matrix& x, const Matrix& y);

struct IterationStats {
  std::size_t iteration = 0;
  double objective = 0.0;       // primal objective of the current iterate
  double dual_objective = 0.0;  // dual value of the current potentials
};

/// Called after every full iteration.
using IterationObserver = std::function<void(const IterationStats&)>;

/// Sinkhorn-Knopp with log-domain stabilization. The returned plan has exact column marginals
/// (up to rounding) and, when converged, row residual <= cfg.tol.
TransportPlan sinkhorn_plan(const Matrix& cost, std::span<const double> a,
                            std::span<const double> b, const SinkhornConfig& cfg,
                            const IterationObserver& observer = {});

/// Objective <P, C> + alpha * sum P log P for an arbitrary nonnegative P.
double entropic_objective(const Matrix& plan, const Matrix& cost, double alpha);

std::vector<double> uniform_weights(std::size_t n);

struct SinkhornResult {
  double value = 0.0;           // plan objective
  double transport_cost = 0.0;
  Matrix grad_x;
  Matrix grad_y;
  TransportPlan plan;
};

/// Entropic OT between point sets with uniform weights. Gradients hold the
/// optimal plan fixed: d/dx_i = sum_j P_ij 2 (x_i - y_j), symmetric for y.
SinkhornResult sinkhorn_distance(const Matrix& x, const Matrix& y, const SinkhornConfig& cfg);

/// Same on scalar sets (e.g. anomaly scores), cost (s_i - t_j)^2.
struct SinkhornResult1d {
  double value = 0.0;
  double transport_cost = 0.0;
  std::vector<double> grad_x;
  std::vector<double> grad_y;
  bool converged = false;
};
SinkhornResult1d sinkhorn_distance_1d(std::span<const double> x, std::span<const double> y,
                                      const SinkhornConfig& cfg);

}  // namespace fairad::ot
