#pragma once

#include "fairad/matrix.hpp"

namespace fairad::ot {

/// Unbiased squared MMD with Gaussian kernel exp(-gamma |x - y|^2):
///   1/(m(m-1)) sum_{i!=j} k(x_i,x_j) + 1/(n(n-1)) sum_{i!=j} k(y_i,y_j)
///   - 2/(mn) sum_{i,j} k(x_i,y_j)
double mmd_squared(const Matrix& x, const Matrix& y, double gamma);

struct MmdResult {
  double value = 0.0;
  Matrix grad_x;
};

/// Value and gradient with respect to x.
MmdResult mmd_squared_with_grad(const Matrix& x, const Matrix& y, double gamma);

/// 1 / (2 median^2) over pairwise distances of the pooled sets.
double median_heuristic_gamma(const Matrix& x, const Matrix& y);

}  // namespace fairad::ot
