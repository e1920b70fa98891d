#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairad/target.hpp"

namespace fairad::metrics {

/// P(anomaly score > normal score) with ties counted as 1/2.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Element of rank ceil(pN) (1-indexed) among the ascending training scores.
double threshold_from_training(std::span<const double> train_scores, double p);

/// F1 of (score > t) against labels, anomaly as the positive class.
double f1_at_threshold(std::span<const double> scores, std::span<const int> labels, double t);

/// Average demographic parity difference: thresholds range over the given
/// scores; for more than two groups the mean over unordered pairs.
/// Group ids are dense 0..K-1; any id below the maximum with no members is an error.
double adpd(std::span<const double> scores, std::span<const int> groups);
/// Same with the number of groups stated, so a missing top id is caught too.
double adpd(std::span<const double> scores, std::span<const int> groups, std::size_t num_groups);

struct FairnessRatio {
  double value = 0.0;
  bool undefined = false;

  bool operator==(const FairnessRatio&) const = default;
};

/// min of the two exceedance-rate ratios between groups gi and gj at t.
FairnessRatio fairness_ratio(std::span<const double> scores, std::span<const int> groups,
                             double t, int gi, int gj);

/// Two-group form; more groups average over pairs and flag undefined if any pair is.
FairnessRatio fairness_ratio(std::span<const double> scores, std::span<const int> groups,
                             double t);

/// Equal-opportunity gap on abnormal rows: |P(score > t | s_i, y=1) - P(score > t | s_j, y=1)|,
/// pairwise mean for more than two groups.
double eo(std::span<const double> scores, std::span<const int> groups,
          std::span<const int> labels, double t);

struct SubsetSize {
  int group = 0;
  int label = 0;
  std::size_t count = 0;

  bool operator==(const SubsetSize&) const = default;
};

struct FairnessReport {
  std::optional<double> auc;
  std::optional<double> f1;
  double adpd_all = 0.0;
  std::optional<double> adpd_normal;
  std::optional<double> adpd_abnormal;
  FairnessRatio fairness_ratio_all;
  std::optional<FairnessRatio> fairness_ratio_normal;
  std::optional<double> eo;
  double threshold = 0.0;
  double p = 0.0;
  std::vector<SubsetSize> subset_sizes;
  std::vector<std::string> notices;
};

/// Full metric suite on a test table with the threshold taken from training
/// scores at percentile p. Metrics whose preconditions fail (no labels,
/// single class, a group without abnormal rows) are left empty with a notice.
FairnessReport evaluate(const ScoreTable& test, std::span<const double> train_scores, double p);

}  // namespace fairad::metrics
