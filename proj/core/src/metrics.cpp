#include "fairad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairad/error.hpp"

namespace fairad::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a) + " scores but " +
                     std::to_string(b) + " entries");
  }
}

void check_labels(std::span<const int> labels) {
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
  }
}

std::size_t infer_groups(std::span<const int> groups) {
  int k = 0;
  for (int g : groups) {
    if (g < 0) throw DataError("group ids must be non-negative");
    k = std::max(k, g + 1);
  }
  return static_cast<std::size_t>(k);
}

/// Sorted scores per group; every group in [0, num_groups) must be non-empty.
std::vector<std::vector<double>> sorted_by_group(std::span<const double> scores,
                                                 std::span<const int> groups,
                                                 std::size_t num_groups, const char* what) {
  check_lengths(scores.size(), groups.size(), what);
  std::vector<std::vector<double>> by(num_groups);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (groups[i] < 0 || static_cast<std::size_t>(groups[i]) >= num_groups) {
      throw DataError(std::string(what) + ": group id " + std::to_string(groups[i]) +
                      " outside 0.." + std::to_string(num_groups - 1));
    }
    by[static_cast<std::size_t>(groups[i])].push_back(scores[i]);
  }
  for (std::size_t g = 0; g < by.size(); ++g) {
    if (by[g].empty()) {
      throw DataError(std::string(what) + ": group " + std::to_string(g) + " has no members");
    }
    std::sort(by[g].begin(), by[g].end());
  }
  return by;
}

/// Share of sorted values strictly greater than t.
double exceedance(const std::vector<double>& sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "auc");
  check_labels(labels);
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (int l : labels) pos += static_cast<std::size_t>(l);
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("auc: labels contain a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with midranks for ties.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) {
      if (labels[order[q]] == 1) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double threshold_from_training(std::span<const double> train_scores, double p) {
  if (train_scores.empty()) throw DataError("threshold_from_training: no training scores");
  if (!(p > 0.0) || p > 1.0) throw ConfigError("threshold_from_training: p must be in (0, 1]");
  const std::size_t n = train_scores.size();
  // The small slack keeps products such as 0.95 * 20 from rounding up a rank.
  const double pn = p * static_cast<double>(n);
  auto rank = static_cast<std::size_t>(std::ceil(pn - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> sorted(train_scores.begin(), train_scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

double f1_at_threshold(std::span<const double> scores, std::span<const int> labels, double t) {
  check_lengths(scores.size(), labels.size(), "f1_at_threshold");
  check_labels(labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > t;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double adpd(std::span<const double> scores, std::span<const int> groups) {
  return adpd(scores, groups, infer_groups(groups));
}

double adpd(std::span<const double> scores, std::span<const int> groups, std::size_t num_groups) {
  if (num_groups < 2) throw DataError("adpd: needs at least 2 groups");
  const auto by = sorted_by_group(scores, groups, num_groups, "adpd");
  const std::size_t k = by.size();
  std::vector<double> rate(k);
  double total = 0.0;
  for (double t : scores) {
    for (std::size_t g = 0; g < k; ++g) rate[g] = exceedance(by[g], t);
    double pair_sum = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) pair_sum += std::abs(rate[a] - rate[b]);
    }
    total += pair_sum;
  }
  const double pairs = static_cast<double>(k * (k - 1) / 2);
  return total / (static_cast<double>(scores.size()) * pairs);
}

FairnessRatio fairness_ratio(std::span<const double> scores, std::span<const int> groups, double t,
                             int gi, int gj) {
  check_lengths(scores.size(), groups.size(), "fairness_ratio");
  std::size_t ni = 0, nj = 0, ei = 0, ej = 0;
  for (std::size_t q = 0; q < scores.size(); ++q) {
    const bool over = scores[q] > t;
    if (groups[q] == gi) {
      ++ni;
      ei += over ? 1 : 0;
    } else if (groups[q] == gj) {
      ++nj;
      ej += over ? 1 : 0;
    }
  }
  if (ni == 0) throw DataError("fairness_ratio: group " + std::to_string(gi) + " has no members");
  if (nj == 0) throw DataError("fairness_ratio: group " + std::to_string(gj) + " has no members");
  if (ei == 0 || ej == 0) return FairnessRatio{0.0, true};
  const double ri = static_cast<double>(ei) / static_cast<double>(ni);
  const double rj = static_cast<double>(ej) / static_cast<double>(nj);
  return FairnessRatio{std::min(ri / rj, rj / ri), false};
}

FairnessRatio fairness_ratio(std::span<const double> scores, std::span<const int> groups, double t) {
  const std::size_t k = infer_groups(groups);
  if (k < 2) throw DataError("fairness_ratio: needs at least 2 groups");
  if (k == 2) return fairness_ratio(scores, groups, t, 0, 1);
  FairnessRatio out;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      auto r = fairness_ratio(scores, groups, t, static_cast<int>(a), static_cast<int>(b));
      sum += r.value;
      out.undefined = out.undefined || r.undefined;
      ++pairs;
    }
  }
  out.value = sum / static_cast<double>(pairs);
  return out;
}

namespace {

double eo_impl(std::span<const double> scores, std::span<const int> groups,
               std::span<const int> labels, double t, std::size_t k) {
  check_lengths(scores.size(), groups.size(), "eo");
  check_lengths(scores.size(), labels.size(), "eo");
  check_labels(labels);
  if (k < 2) throw DataError("eo: needs at least 2 groups");
  std::vector<std::size_t> n(k, 0), over(k, 0);
  for (std::size_t q = 0; q < scores.size(); ++q) {
    if (labels[q] != 1) continue;
    const auto g = static_cast<std::size_t>(groups[q]);
    if (g >= k) throw DataError("eo: group id out of range");
    ++n[g];
    if (scores[q] > t) ++over[g];
  }
  std::vector<double> rate(k);
  for (std::size_t g = 0; g < k; ++g) {
    if (n[g] == 0) throw DataError("eo: group " + std::to_string(g) + " has no abnormal samples");
    rate[g] = static_cast<double>(over[g]) / static_cast<double>(n[g]);
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) sum += std::abs(rate[a] - rate[b]);
  }
  return sum / static_cast<double>(k * (k - 1) / 2);
}

}  // namespace

double eo(std::span<const double> scores, std::span<const int> groups, std::span<const int> labels,
          double t) {
  return eo_impl(scores, groups, labels, t, infer_groups(groups));
}

FairnessReport evaluate(const ScoreTable& test, std::span<const double> train_scores, double p) {
  test.validate();
  FairnessReport r;
  r.p = p;
  r.threshold = threshold_from_training(train_scores, p);
  const std::size_t k = infer_groups(test.group_ids);
  r.adpd_all = adpd(test.scores, test.group_ids, k);
  r.fairness_ratio_all = fairness_ratio(test.scores, test.group_ids, r.threshold);

  if (!test.labels) {
    r.notices.push_back("no labels: AUC, F1, EO and per-label subsets omitted");
    for (std::size_t g = 0; g < k; ++g) {
      std::size_t c = 0;
      for (int id : test.group_ids) c += id == static_cast<int>(g) ? 1 : 0;
      r.subset_sizes.push_back(SubsetSize{static_cast<int>(g), -1, c});
    }
    return r;
  }
  const auto& labels = *test.labels;
  for (std::size_t g = 0; g < k; ++g) {
    for (int l = 0; l <= 1; ++l) {
      std::size_t c = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        c += (test.group_ids[i] == static_cast<int>(g) && labels[i] == l) ? 1 : 0;
      }
      r.subset_sizes.push_back(SubsetSize{static_cast<int>(g), l, c});
    }
  }
  try {
    r.auc = auc(test.scores, labels);
  } catch (const DataError& e) {
    r.notices.push_back(std::string("AUC omitted: ") + e.what());
  }
  r.f1 = f1_at_threshold(test.scores, labels, r.threshold);

  const ScoreTable normal = test.subset_by_label(0);
  const ScoreTable abnormal = test.subset_by_label(1);
  try {
    r.adpd_normal = adpd(normal.scores, normal.group_ids, k);
    auto fr = FairnessRatio{};
    if (k == 2) {
      fr = fairness_ratio(normal.scores, normal.group_ids, r.threshold, 0, 1);
    } else {
      fr = fairness_ratio(normal.scores, normal.group_ids, r.threshold);
    }
    r.fairness_ratio_normal = fr;
  } catch (const DataError& e) {
    r.notices.push_back(std::string("normal-subset metrics omitted: ") + e.what());
  }
  try {
    r.adpd_abnormal = adpd(abnormal.scores, abnormal.group_ids, k);
  } catch (const DataError& e) {
    r.notices.push_back(std::string("abnormal-subset ADPD omitted: ") + e.what());
  }
  try {
    r.eo = eo_impl(test.scores, test.group_ids, labels, r.threshold, k);
  } catch (const DataError& e) {
    r.notices.push_back(std::string("EO omitted: ") + e.what());
  }
  return r;
}

}  // namespace fairad::metrics
