#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairad/matrix.hpp"
#include "fairad/rng.hpp"

namespace fairad {

/// Standard normal in R^dim conditioned on |z| <= radius.
struct TargetDistribution {
  std::size_t dim = 8;
  double radius = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// Probability mass of N(0, I) inside the truncation ball.
  double acceptance_probability() const;
};

/// sqrt of the chi-square(dim) quantile at `mass`; keeps that share of the
/// untruncated Gaussian.
double default_truncation_radius(std::size_t dim, double mass = 0.99);

TargetDistribution make_target(std::size_t dim, std::uint64_t seed);

/// Rejection sampler. Holds its own generator so successive calls continue
/// one stream.
class TargetSampler {
 public:
  explicit TargetSampler(const TargetDistribution& dist);
  Matrix sample(std::size_t n);
  const TargetDistribution& distribution() const noexcept { return dist_; }

 private:
  TargetDistribution dist_;
  Rng rng_;
};

/// n draws from a fresh sampler seeded with dist.seed.
Matrix sample_target(const TargetDistribution& dist, std::size_t n);

/// Row norms of the embedding.
std::vector<double> anomaly_score(const Matrix& embedded);

/// Gaussian density of an embedding with the given norm: (2 pi)^{-m/2} exp(-score^2 / 2).
double density_estimate(double score, std::size_t m);

/// 1 iff score > threshold. A score equal to the threshold is normal.
int hard_score(double score, double threshold);
std::vector<int> hard_score(std::span<const double> scores, double threshold);

struct ScoreTable {
  std::vector<double> scores;
  std::vector<int> group_ids;
  std::optional<std::vector<int>> labels;

  std::size_t size() const noexcept { return scores.size(); }
  void validate() const;
  /// Rows whose label equals `label` (requires labels).
  ScoreTable subset_by_label(int label) const;
};

}  // namespace fairad
