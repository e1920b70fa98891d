#include "fairad/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairad/error.hpp"

namespace fairad::ot {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

void check(const Matrix& x, const Matrix& y, double gamma) {
  if (x.rows() < 2 || y.rows() < 2) {
    throw ConfigError("mmd_squared: each set needs at least 2 points (got " +
                      std::to_string(x.rows()) + " and " + std::to_string(y.rows()) + ")");
  }
  if (x.cols() != y.cols()) {
    throw ShapeError("mmd_squared: feature dims differ (" + x.shape_string() + " vs " +
                     y.shape_string() + ")");
  }
  if (!(gamma > 0.0)) throw ConfigError("mmd_squared: gamma must be > 0");
}

}  // namespace

double mmd_squared(const Matrix& x, const Matrix& y, double gamma) {
  return mmd_squared_with_grad(x, y, gamma).value;
}

MmdResult mmd_squared_with_grad(const Matrix& x, const Matrix& y, double gamma) {
  check(x, y, gamma);
  const double m = static_cast<double>(x.rows());
  const double n = static_cast<double>(y.rows());
  const std::size_t k = x.cols();
  MmdResult r;
  r.grad_x = Matrix(x.rows(), k);

  double sxx = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      const double kv = std::exp(-gamma * sq_dist(x.row(i), x.row(j)));
      sxx += 2.0 * kv;
      // d/dx_i of both (i,j) and (j,i) terms.
      const double coef = 2.0 * kv * (-2.0 * gamma) / (m * (m - 1.0));
      for (std::size_t d = 0; d < k; ++d) {
        const double diff = x(i, d) - x(j, d);
        r.grad_x(i, d) += coef * diff;
        r.grad_x(j, d) -= coef * diff;
      }
    }
  }
  double syy = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = i + 1; j < y.rows(); ++j) {
      syy += 2.0 * std::exp(-gamma * sq_dist(y.row(i), y.row(j)));
    }
  }
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows(); ++j) {
      const double kv = std::exp(-gamma * sq_dist(x.row(i), y.row(j)));
      sxy += kv;
      const double coef = -2.0 / (m * n) * kv * (-2.0 * gamma);
      for (std::size_t d = 0; d < k; ++d) r.grad_x(i, d) += coef * (x(i, d) - y(j, d));
    }
  }
  r.value = sxx / (m * (m - 1.0)) + syy / (n * (n - 1.0)) - 2.0 * sxy / (m * n);
  return r;
}

double median_heuristic_gamma(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw ShapeError("median_heuristic_gamma: feature dims differ");
  std::vector<const double*> rows;
  for (std::size_t i = 0; i < x.rows(); ++i) rows.push_back(x.row(i).data());
  for (std::size_t i = 0; i < y.rows(); ++i) rows.push_back(y.row(i).data());
  std::vector<double> dists;
  const std::size_t k = x.cols();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      dists.push_back(std::sqrt(sq_dist({rows[i], k}, {rows[j], k})));
    }
  }
  if (dists.empty()) return 1.0;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double med = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) return 1.0;
  return 1.0 / (2.0 * med * med);
}

}  // namespace fairad::ot
