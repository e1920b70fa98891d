#include "fairad/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fairad/error.hpp"

namespace fairad::ot {

void SinkhornConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("sinkhorn: alpha must be > 0");
  if (!(tol > 0.0)) throw ConfigError("sinkhorn: tol must be > 0");
  if (max_iter == 0) throw ConfigError("sinkhorn: max_iter must be >= 1");
}

Matrix cost_matrix(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) {
    throw ShapeError("cost_matrix: feature dims differ (" + x.shape_string() + " vs " +
                     y.shape_string() + ")");
  }
  const std::size_t k = x.cols();
  Matrix c(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i).data();
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < y.rows(); ++j) {
      const double* yj = y.row(j).data();
      double s = 0.0;
      for (std::size_t d = 0; d < k; ++d) {
        const double diff = xi[d] - yj[d];
        s += diff * diff;
      }
      ci[j] = s;
    }
  }
  return c;
}

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

double entropic_objective(const Matrix& plan, const Matrix& cost, double alpha) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw ShapeError("entropic_objective: plan " + plan.shape_string() + " vs cost " +
                     cost.shape_string());
  }
  double transport = 0.0;
  double entropy = 0.0;
  auto p = plan.data();
  auto c = cost.data();
  for (std::size_t k = 0; k < p.size(); ++k) {
    transport += p[k] * c[k];
    if (p[k] > 0.0) entropy += p[k] * std::log(p[k]);
  }
  return transport + alpha * entropy;
}

namespace {

void check_marginal(std::span<const double> w, const char* name) {
  if (w.empty()) throw ConfigError(std::string("sinkhorn: empty marginal ") + name);
  double sum = 0.0;
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("sinkhorn: marginal ") + name + " must be strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(std::string("sinkhorn: marginal ") + name + " sums to " +
                      std::to_string(sum));
  }
}

// out[i] = log sum_j exp(pot[j] + kernel(i, j))
void row_logsumexp(const Matrix& kernel, std::span<const double> pot, std::span<double> out) {
  const std::size_t n = kernel.cols();
  std::vector<double> tmp(n);
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    const double* k = kernel.row(i).data();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      tmp[j] = pot[j] + k[j];
      mx = std::max(mx, tmp[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(tmp[j] - mx);
    out[i] = mx + std::log(s);
  }
}

struct PlanStats {
  double objective = 0.0;
  double transport = 0.0;
};

PlanStats plan_stats(const Matrix& cost, const Matrix& kernel, std::span<const double> f,
                     std::span<const double> g, double alpha) {
  PlanStats s;
  double entropy = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    const double* c = cost.row(i).data();
    const double* k = kernel.row(i).data();
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      const double logp = f[i] + g[j] + k[j];
      const double p = std::exp(logp);
      s.transport += p * c[j];
      entropy += p * logp;
    }
  }
  s.objective = s.transport + alpha * entropy;
  return s;
}

}  // namespace

TransportPlan sinkhorn_plan(const Matrix& cost, std::span<const double> a,
                            std::span<const double> b, const SinkhornConfig& cfg,
                            const IterationObserver& observer) {
  cfg.validate();
  const std::size_t n1 = cost.rows();
  const std::size_t n2 = cost.cols();
  if (a.size() != n1 || b.size() != n2) {
    throw ShapeError("sinkhorn: cost " + cost.shape_string() + " with marginals of length " +
                     std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  check_marginal(a, "a");
  check_marginal(b, "b");
  if (!cost.all_finite()) throw NumericalError("sinkhorn: cost matrix has non-finite entries");

  // Scaled kernel -C/alpha and its transpose for the column pass.
  Matrix kernel(n1, n2);
  Matrix kernel_t(n2, n1);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double v = -cost(i, j) / cfg.alpha;
      kernel(i, j) = v;
      kernel_t(j, i) = v;
    }
  }
  std::vector<double> log_a(n1), log_b(n2);
  for (std::size_t i = 0; i < n1; ++i) log_a[i] = std::log(a[i]);
  for (std::size_t j = 0; j < n2; ++j) log_b[j] = std::log(b[j]);

  // Potentials divided by alpha: P_ij = u_i v_j exp(f_i + g_j - C_ij / alpha).
  // The scalings u, v carry the cheap multiplicative updates and are folded
  // back into f, g whenever they drift far from 1 or the kernel underflows.
  std::vector<double> f(n1, 0.0), g(n2, 0.0), u(n1, 1.0), v(n2, 1.0);
  std::vector<double> lse_row(n1), lse_col(n2), kv(n1), ktu(n2);
  Matrix scaled(n1, n2);
  bool stale = true;

  auto absorb = [&] {
    for (std::size_t i = 0; i < n1; ++i) {
      f[i] += std::log(u[i]);
      u[i] = 1.0;
    }
    for (std::size_t j = 0; j < n2; ++j) {
      g[j] += std::log(v[j]);
      v[j] = 1.0;
    }
    stale = true;
  };
  auto rebuild = [&] {
    for (std::size_t i = 0; i < n1; ++i) {
      const double* k = kernel.row(i).data();
      double* out = scaled.row(i).data();
      for (std::size_t j = 0; j < n2; ++j) out[j] = std::exp(f[i] + g[j] + k[j]);
    }
    stale = false;
  };
  auto log_pass = [&] {
    absorb();
    row_logsumexp(kernel, g, lse_row);
    for (std::size_t i = 0; i < n1; ++i) f[i] = log_a[i] - lse_row[i];
    row_logsumexp(kernel_t, f, lse_col);
    for (std::size_t j = 0; j < n2; ++j) g[j] = log_b[j] - lse_col[j];
  };
  auto check_finite = [&](std::size_t it) {
    for (std::size_t i = 0; i < n1; ++i) {
      if (!std::isfinite(f[i]) || !std::isfinite(u[i])) {
        throw NumericalError("sinkhorn: non-finite row potential at iteration " + std::to_string(it));
      }
    }
    for (std::size_t j = 0; j < n2; ++j) {
      if (!std::isfinite(g[j]) || !std::isfinite(v[j])) {
        throw NumericalError("sinkhorn: non-finite column potential at iteration " + std::to_string(it));
      }
    }
  };
  constexpr double kTiny = 1e-300;
  constexpr double kDrift = 50.0;

  std::size_t iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    if (iter == 0) {
      log_pass();
    } else {
      if (stale) rebuild();
      bool bad = false;
      for (std::size_t i = 0; i < n1; ++i) {
        const double* k = scaled.row(i).data();
        double s = 0.0;
        for (std::size_t j = 0; j < n2; ++j) s += k[j] * v[j];
        kv[i] = s;
        bad = bad || !(s > kTiny) || !std::isfinite(s);
      }
      if (!bad) {
        // Columns are exact after the last column update; rows are what remain.
        double res = 0.0;
        for (std::size_t i = 0; i < n1; ++i) res = std::max(res, std::abs(u[i] * kv[i] - a[i]));
        if (res <= cfg.tol) break;
        for (std::size_t i = 0; i < n1; ++i) u[i] = a[i] / kv[i];
        std::fill(ktu.begin(), ktu.end(), 0.0);
        for (std::size_t i = 0; i < n1; ++i) {
          const double* k = scaled.row(i).data();
          for (std::size_t j = 0; j < n2; ++j) ktu[j] += k[j] * u[i];
        }
        for (std::size_t j = 0; j < n2; ++j) bad = bad || !(ktu[j] > kTiny) || !std::isfinite(ktu[j]);
        if (!bad) {
          for (std::size_t j = 0; j < n2; ++j) v[j] = b[j] / ktu[j];
        }
      }
      if (bad) {
        log_pass();
      } else {
        double drift = 0.0;
        for (double x : u) drift = std::max(drift, std::abs(std::log(x)));
        for (double x : v) drift = std::max(drift, std::abs(std::log(x)));
        if (drift > kDrift) absorb();
      }
    }
    check_finite(iter + 1);
    if (observer) {
      std::vector<double> fe(n1), ge(n2);
      for (std::size_t i = 0; i < n1; ++i) fe[i] = f[i] + std::log(u[i]);
      for (std::size_t j = 0; j < n2; ++j) ge[j] = g[j] + std::log(v[j]);
      IterationStats st;
      st.iteration = iter + 1;
      st.objective = plan_stats(cost, kernel, fe, ge, cfg.alpha).objective;
      // After the column pass the plan has unit mass, so the dual reduces to the linear part.
      double lin = 0.0;
      for (std::size_t i = 0; i < n1; ++i) lin += a[i] * fe[i];
      for (std::size_t j = 0; j < n2; ++j) lin += b[j] * ge[j];
      st.dual_objective = cfg.alpha * lin;
      observer(st);
    }
  }
  absorb();

  TransportPlan tp;
  tp.plan = Matrix(n1, n2);
  tp.row_marginal.assign(a.begin(), a.end());
  tp.col_marginal.assign(b.begin(), b.end());
  tp.iterations_used = iter;
  std::vector<double> rows(n1, 0.0), cols(n2, 0.0);
  double transport = 0.0;
  double entropy = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double logp = f[i] + g[j] + kernel(i, j);
      const double p = std::exp(logp);
      tp.plan(i, j) = p;
      rows[i] += p;
      cols[j] += p;
      transport += p * cost(i, j);
      if (p > 0.0) entropy += p * logp;
    }
  }
  for (std::size_t i = 0; i < n1; ++i) tp.row_residual = std::max(tp.row_residual, std::abs(rows[i] - a[i]));
  for (std::size_t j = 0; j < n2; ++j) tp.col_residual = std::max(tp.col_residual, std::abs(cols[j] - b[j]));
  tp.transport_cost = transport;
  tp.objective = transport + cfg.alpha * entropy;
  tp.converged = tp.row_residual <= cfg.tol && tp.col_residual <= cfg.tol;
  return tp;
}

SinkhornResult sinkhorn_distance(const Matrix& x, const Matrix& y, const SinkhornConfig& cfg) {
  if (x.rows() == 0 || y.rows() == 0) throw ConfigError("sinkhorn_distance: empty point set");
  const Matrix cost = cost_matrix(x, y);
  const auto a = uniform_weights(x.rows());
  const auto b = uniform_weights(y.rows());
  SinkhornResult r;
  r.plan = sinkhorn_plan(cost, a, b, cfg);
  r.value = r.plan.objective;
  r.transport_cost = r.plan.transport_cost;

  const std::size_t k = x.cols();
  const Matrix& p = r.plan.plan;
  r.grad_x = Matrix(x.rows(), k);
  r.grad_y = Matrix(y.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i).data();
    double* gx = r.grad_x.row(i).data();
    for (std::size_t j = 0; j < y.rows(); ++j) {
      const double pij = p(i, j);
      const double* yj = y.row(j).data();
      double* gy = r.grad_y.row(j).data();
      for (std::size_t d = 0; d < k; ++d) {
        const double diff = 2.0 * pij * (xi[d] - yj[d]);
        gx[d] += diff;
        gy[d] -= diff;
      }
    }
  }
  return r;
}

SinkhornResult1d sinkhorn_distance_1d(std::span<const double> x, std::span<const double> y,
                                      const SinkhornConfig& cfg) {
  Matrix xm(x.size(), 1, std::vector<double>(x.begin(), x.end()));
  Matrix ym(y.size(), 1, std::vector<double>(y.begin(), y.end()));
  SinkhornResult full = sinkhorn_distance(xm, ym, cfg);
  SinkhornResult1d r;
  r.value = full.value;
  r.transport_cost = full.transport_cost;
  r.converged = full.plan.converged;
  r.grad_x.assign(full.grad_x.data().begin(), full.grad_x.data().end());
  r.grad_y.assign(full.grad_y.data().begin(), full.grad_y.data().end());
  return r;
}

}  // namespace fairad::ot
