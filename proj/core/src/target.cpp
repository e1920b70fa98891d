#include "fairad/target.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "fairad/error.hpp"

namespace fairad {

namespace {
constexpr double kMinAcceptance = 1e-6;
}

void TargetDistribution::validate() const {
  if (dim < 1) throw ConfigError("target distribution: dim must be >= 1");
  if (!(radius > 0.0)) throw ConfigError("target distribution: radius must be > 0");
}

double TargetDistribution::acceptance_probability() const {
  validate();
  if (std::isinf(radius)) return 1.0;
  boost::math::chi_squared_distribution<double> chi2(static_cast<double>(dim));
  return boost::math::cdf(chi2, radius * radius);
}

double default_truncation_radius(std::size_t dim, double mass) {
  if (dim < 1) throw ConfigError("default_truncation_radius: dim must be >= 1");
  boost::math::chi_squared_distribution<double> chi2(static_cast<double>(dim));
  return std::sqrt(boost::math::quantile(chi2, mass));
}

TargetDistribution make_target(std::size_t dim, std::uint64_t seed) {
  return TargetDistribution{dim, default_truncation_radius(dim), seed};
}

TargetSampler::TargetSampler(const TargetDistribution& dist) : dist_(dist), rng_(dist.seed) {
  dist_.validate();
  const double acc = dist_.acceptance_probability();
  if (acc < kMinAcceptance) {
    throw ConfigError("target distribution: acceptance probability " + std::to_string(acc) +
                      " for radius " + std::to_string(dist_.radius) + " in dim " +
                      std::to_string(dist_.dim) + " is below 1e-6");
  }
}

Matrix TargetSampler::sample(std::size_t n) {
  if (n < 1) throw ConfigError("sample_target: n must be >= 1");
  const std::size_t m = dist_.dim;
  const double r2 = dist_.radius * dist_.radius;
  Matrix out(n, m);
  std::vector<double> z(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      double norm2 = 0.0;
      for (std::size_t d = 0; d < m; ++d) {
        z[d] = rng_.normal();
        norm2 += z[d] * z[d];
      }
      if (norm2 <= r2) break;
    }
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

Matrix sample_target(const TargetDistribution& dist, std::size_t n) {
  TargetSampler sampler(dist);
  return sampler.sample(n);
}

std::vector<double> anomaly_score(const Matrix& embedded) {
  std::vector<double> s(embedded.rows());
  for (std::size_t i = 0; i < embedded.rows(); ++i) {
    double acc = 0.0;
    for (double v : embedded.row(i)) acc += v * v;
    s[i] = std::sqrt(acc);
  }
  return s;
}

double density_estimate(double score, std::size_t m) {
  if (!(score >= 0.0)) throw ConfigError("density_estimate: score must be >= 0");
  return std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(m)) *
         std::exp(-0.5 * score * score);
}

int hard_score(double score, double threshold) { return score > threshold ? 1 : 0; }

std::vector<int> hard_score(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = hard_score(scores[i], threshold);
  return out;
}

void ScoreTable::validate() const {
  if (group_ids.size() != scores.size()) {
    throw ShapeError("score table: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(group_ids.size()) + " group ids");
  }
  if (labels && labels->size() != scores.size()) {
    throw ShapeError("score table: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(labels->size()) + " labels");
  }
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DataError("score table: scores must be finite and >= 0");
  }
  if (labels) {
    for (int l : *labels) {
      if (l != 0 && l != 1) throw DataError("score table: labels must be 0 or 1");
    }
  }
}

ScoreTable ScoreTable::subset_by_label(int label) const {
  if (!labels) throw DataError("score table has no labels");
  ScoreTable out;
  out.labels.emplace();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if ((*labels)[i] != label) continue;
    out.scores.push_back(scores[i]);
    out.group_ids.push_back(group_ids[i]);
    out.labels->push_back(label);
  }
  return out;
}

}  // namespace fairad
