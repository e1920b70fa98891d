#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairad/matrix.hpp"

namespace fairad::data {

enum class ColumnRole { Numeric, Categorical, Sensitive, Label, Ignore };
enum class MissingPolicy { Drop, Error };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::Numeric;
  /// Vocabulary for categorical and categorical-sensitive columns.
  std::vector<std::string> categories;
  /// Numeric sensitive columns: group k = first inclusive [lo, hi] interval
  /// containing the value, or intervals.size() ("others") if none does.
  std::vector<std::pair<double, double>> intervals;
  /// Label column values; anything else is an unknown category.
  std::vector<std::string> normal_values;
  std::vector<std::string> abnormal_values;
};

/// Column roles and parsing policy. JSON form:
///   {"columns": [{"name": ..., "role": "numeric"|"categorical"|"sensitive"|"label"|"ignore",
///                 "categories": [...], "intervals": [[lo, hi], ...],
///                 "normal": [...], "abnormal": [...]}, ...],
///    "missing_values": ["", "?"], "missing_policy": "drop"|"error"}
struct Schema {
  std::vector<ColumnSpec> columns;
  std::vector<std::string> missing_values{""};
  MissingPolicy missing_policy = MissingPolicy::Drop;

  static Schema from_json_text(const std::string& text);
  static Schema load(const std::filesystem::path& path);
  std::string to_json_text() const;

  const ColumnSpec& sensitive_column() const;
  const ColumnSpec& label_column() const;
  std::vector<std::string> group_names() const;
};

enum class FeatureKind { Numeric, Categorical };

struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<std::string> categories;  // categorical: value k is categories[k]
};

/// Rows of a table. Before preprocessing categorical features hold category
/// codes; afterwards every column is numeric.
struct Dataset {
  Matrix features;
  std::vector<FeatureColumn> columns;
  std::vector<int> sensitive;          // dense 0..K-1
  std::vector<std::string> group_names;
  std::vector<int> labels;             // 0 normal, 1 abnormal
  std::vector<std::size_t> row_ids;    // stable ids from the source table
  std::vector<bool> contaminated;      // rows appended as contamination

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_groups() const noexcept { return group_names.size(); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  std::size_t count(int group, int label) const;
};

/// Reads a UTF-8 CSV with header row; quoted fields allowed.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);
Dataset parse_csv(const std::string& text, const Schema& schema);

/// Splits one CSV record into fields (RFC 4180 quoting).
std::vector<std::string> split_csv_record(const std::string& line);

struct PreprocessOptions {
  bool include_sensitive = false;
};

/// Standardization and one-hot layout learned from a training split.
class Preprocessor {
 public:
  static Preprocessor fit(const Dataset& train, PreprocessOptions options = {});
  Dataset apply(const Dataset& ds) const;

  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stddevs() const noexcept { return stds_; }
  /// Constant columns found by fit(); they are emitted as zeros.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  PreprocessOptions options_;
  std::vector<FeatureColumn> source_columns_;
  std::vector<double> means_;
  std::vector<double> stds_;
  std::size_t num_groups_ = 0;
  std::vector<std::string> warnings_;
};

/// Fit on `train`, apply to both.
std::pair<Dataset, Dataset> preprocess(const Dataset& train, const Dataset& test,
                                       PreprocessOptions options = {},
                                       std::vector<std::string>* warnings = nullptr);

struct SplitCell {
  int group = 0;
  int label = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

struct SplitPlan {
  std::vector<SplitCell> cells;
  std::uint64_t seed = 0;
  double contamination_rate = 0.0;

  /// Per-group counts: train normals, test normals, test abnormals.
  static SplitPlan per_group(std::span<const std::size_t> train_normal,
                             std::span<const std::size_t> test_normal,
                             std::span<const std::size_t> test_abnormal, std::uint64_t seed,
                             double contamination_rate = 0.0);
};

struct Split {
  Dataset train;
  Dataset test;
};

/// Disjoint train/test draws with exact per-cell counts. Train cells must be
/// normal. With a contamination rate, abnormal rows not used by the test set
/// are appended to train.
Split split(const Dataset& ds, const SplitPlan& plan);

/// Appends floor(rate * #normal) rows of `source_abnormal` drawn without
/// replacement. Appended rows keep label 1 and are flagged as contaminated.
Dataset contaminate(const Dataset& train, const Dataset& source_abnormal, double rate,
                    std::uint64_t seed);

struct SyntheticSpec {
  std::size_t dim = 4;
  std::size_t normal_per_group = 200;
  std::size_t abnormal_per_group = 100;
  double group_shift = 2.0;       // group 1 mean offset along the first axis (in sigma)
  double anomaly_scale = 2.5;     // abnormal rows: group mean + anomaly_scale * N(0, I)
  std::uint64_t seed = 0;
};

/// Two groups of Gaussian data; group 1 normals are shifted along axis 0.
Dataset make_synthetic(const SyntheticSpec& spec);

/// Writes the dataset (raw features) as CSV plus a matching schema.
void write_csv(const Dataset& ds, const std::filesystem::path& csv_path);
Schema schema_for(const Dataset& ds);

}  // namespace fairad::data
