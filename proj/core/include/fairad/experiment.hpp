#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairad/dataset.hpp"
#include "fairad/metrics.hpp"
#include "fairad/trainer.hpp"

namespace fairad::harness {

inline constexpr int kReportFormatVersion = 1;

struct DatasetSource {
  std::string name;
  std::filesystem::path csv;      // relative paths resolve against FAIRAD_DATA_DIR
  std::filesystem::path schema;
  std::optional<data::SyntheticSpec> synthetic;  // used instead of csv when set
  bool include_sensitive = false;
  /// Fallback root for relative paths when FAIRAD_DATA_DIR is unset; not serialized.
  std::filesystem::path base_dir;
};

struct SplitSpec {
  std::vector<std::size_t> train_normal;
  std::vector<std::size_t> test_normal;
  std::vector<std::size_t> test_abnormal;
  double contamination_rate = 0.0;
};

struct ExperimentConfig {
  std::string name;
  DatasetSource dataset;
  SplitSpec split;
  model::Variant variant = model::Variant::Im;
  model::TrainConfig train;
  std::vector<double> p_values{0.90, 0.95};
  std::size_t repetitions = 5;
  std::uint64_t base_seed = 0;
  std::filesystem::path output;

  void validate() const;
  std::string method_name() const;

  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json_text() const;
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;
};

struct HistoryDigest {
  std::size_t epochs = 0;
  double final_total = 0.0;
  double final_sinkhorn = 0.0;
  double final_reconstruction = 0.0;
  double final_fairness = 0.0;
  std::uint64_t hash = 0;  // FNV-1a over the raw bytes of every recorded value
};

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<metrics::FairnessReport> reports;  // one per p value
  HistoryDigest history;
  std::optional<std::string> failure;
};

struct Aggregate {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;   // sample standard deviation (0 for a single repetition)
  std::size_t count = 0;
};

struct RunReport {
  std::string name;
  std::string method;
  std::string dataset;
  std::uint64_t config_hash = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<RepetitionResult> repetitions;
  std::vector<Aggregate> aggregates;

  bool ok() const;
  const Aggregate* find(const std::string& metric) const;
  std::string to_json_text() const;
  static RunReport from_json_text(const std::string& text);
};

/// Mean / sample std of every metric over successful repetitions.
std::vector<Aggregate> aggregate(const std::vector<RepetitionResult>& reps,
                                 const std::vector<double>& p_values);

/// Loads (or generates) the dataset named by the source.
data::Dataset load_dataset(const DatasetSource& source);

/// split -> preprocess -> train -> score -> metrics for one repetition.
RepetitionResult run_repetition(const ExperimentConfig& cfg, const data::Dataset& full,
                                std::size_t index);

/// All repetitions with seeds base_seed + i. Stage errors are recorded in the
/// repetition's failure field; the report is still assembled.
RunReport run_experiment(const ExperimentConfig& cfg);

enum class SweepParam { Beta, Lambda };
SweepParam sweep_param_from_string(const std::string& name);

std::vector<RunReport> sweep(const ExperimentConfig& cfg, SweepParam param,
                             const std::vector<double>& values);

/// value, AUC mean/std, ADPD(all) mean/std per sweep point.
std::string sweep_table_csv(SweepParam param, const std::vector<double>& values,
                            const std::vector<RunReport>& reports);

/// Score file: header "score,group,label" (label column optional).
ScoreTable read_score_csv(const std::filesystem::path& path);
ScoreTable parse_score_csv(const std::string& text);
std::string score_table_csv(const ScoreTable& table);

/// Metric suite on an external score file. The threshold comes from
/// `train_scores` when given, otherwise from the file's own scores.
std::vector<metrics::FairnessReport> eval_scores(const ScoreTable& table,
                                                 const std::vector<double>& p_values,
                                                 const std::optional<std::vector<double>>& train_scores = std::nullopt);

std::string fairness_report_json(const metrics::FairnessReport& report);

struct TradeoffRow {
  std::string method;
  std::string dataset;
  double auc = 0.0;
  double adpd_all = 0.0;
  double adpd_normal = 0.0;
  double adpd_abnormal = 0.0;

  bool operator==(const TradeoffRow&) const = default;
};

std::vector<TradeoffRow> tradeoff_rows(const std::vector<RunReport>& reports);
/// Header "method,dataset,auc,adpd_all,adpd_normal,adpd_abnormal" and one row per report.
std::string export_tradeoff(const std::vector<RunReport>& reports);
std::vector<TradeoffRow> parse_tradeoff_csv(const std::string& text);

}  // namespace fairad::harness
