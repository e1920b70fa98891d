#include "fairad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairad/error.hpp"
#include "fairad/rng.hpp"

namespace fairad::data {

using nlohmann::json;

namespace {

std::string_view role_name(ColumnRole r) {
  switch (r) {
    case ColumnRole::Numeric: return "numeric";
    case ColumnRole::Categorical: return "categorical";
    case ColumnRole::Sensitive: return "sensitive";
    case ColumnRole::Label: return "label";
    case ColumnRole::Ignore: return "ignore";
  }
  return "numeric";
}

ColumnRole role_from_name(const std::string& s) {
  if (s == "numeric") return ColumnRole::Numeric;
  if (s == "categorical") return ColumnRole::Categorical;
  if (s == "sensitive") return ColumnRole::Sensitive;
  if (s == "label") return ColumnRole::Label;
  if (s == "ignore") return ColumnRole::Ignore;
  throw ConfigError("schema: unknown column role '" + s + "'");
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string interval_name(const std::pair<double, double>& iv) {
  std::ostringstream os;
  os << '[' << iv.first << ',' << iv.second << ']';
  return os.str();
}

void validate_schema(const Schema& schema) {
  std::set<std::string> names;
  std::size_t sensitive = 0, label = 0;
  for (const auto& c : schema.columns) {
    if (c.name.empty()) throw ConfigError("schema: column with empty name");
    if (!names.insert(c.name).second) throw ConfigError("schema: duplicate column '" + c.name + "'");
    switch (c.role) {
      case ColumnRole::Categorical:
        if (c.categories.empty()) {
          throw ConfigError("schema: categorical column '" + c.name + "' has no categories");
        }
        break;
      case ColumnRole::Sensitive:
        ++sensitive;
        if (c.categories.empty() == c.intervals.empty()) {
          throw ConfigError("schema: sensitive column '" + c.name +
                            "' needs either categories or intervals");
        }
        for (const auto& iv : c.intervals) {
          if (!(iv.first <= iv.second)) {
            throw ConfigError("schema: interval with lo > hi in column '" + c.name + "'");
          }
        }
        break;
      case ColumnRole::Label:
        ++label;
        if (c.normal_values.empty() || c.abnormal_values.empty()) {
          throw ConfigError("schema: label column '" + c.name + "' needs normal and abnormal values");
        }
        break;
      default:
        break;
    }
  }
  if (sensitive != 1) throw ConfigError("schema: exactly one sensitive column required");
  if (label != 1) throw ConfigError("schema: exactly one label column required");
}

/// Splits text into CSV records, keeping newlines that sit inside quotes.
std::vector<std::pair<std::size_t, std::string>> csv_records(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string cur;
  bool in_quotes = false;
  std::size_t line = 1, start_line = 1;
  for (char ch : text) {
    if (ch == '"') in_quotes = !in_quotes;
    if (ch == '\n' && !in_quotes) {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      out.emplace_back(start_line, std::move(cur));
      cur.clear();
      ++line;
      start_line = line;
      continue;
    }
    if (ch == '\n') ++line;
    cur.push_back(ch);
  }
  if (in_quotes) throw ParseError("csv: unterminated quoted field starting on line " + std::to_string(start_line));
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    out.emplace_back(start_line, std::move(cur));
  }
  return out;
}

}  // namespace

Schema Schema::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("schema: ") + e.what());
  }
  Schema s;
  try {
    for (const auto& jc : j.at("columns")) {
      ColumnSpec c;
      c.name = jc.at("name").get<std::string>();
      c.role = role_from_name(jc.at("role").get<std::string>());
      if (jc.contains("categories")) c.categories = jc["categories"].get<std::vector<std::string>>();
      if (jc.contains("intervals")) {
        for (const auto& iv : jc["intervals"]) {
          if (!iv.is_array() || iv.size() != 2) throw ConfigError("schema: intervals are [lo, hi] pairs");
          c.intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
        }
      }
      if (jc.contains("normal")) c.normal_values = jc["normal"].get<std::vector<std::string>>();
      if (jc.contains("abnormal")) c.abnormal_values = jc["abnormal"].get<std::vector<std::string>>();
      s.columns.push_back(std::move(c));
    }
    if (j.contains("missing_values")) s.missing_values = j["missing_values"].get<std::vector<std::string>>();
    if (j.contains("missing_policy")) {
      const auto p = j["missing_policy"].get<std::string>();
      if (p == "drop") s.missing_policy = MissingPolicy::Drop;
      else if (p == "error") s.missing_policy = MissingPolicy::Error;
      else throw ConfigError("schema: unknown missing_policy '" + p + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  validate_schema(s);
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Schema::to_json_text() const {
  json j;
  j["columns"] = json::array();
  for (const auto& c : columns) {
    json jc{{"name", c.name}, {"role", role_name(c.role)}};
    if (!c.categories.empty()) jc["categories"] = c.categories;
    if (!c.intervals.empty()) {
      jc["intervals"] = json::array();
      for (const auto& iv : c.intervals) jc["intervals"].push_back({iv.first, iv.second});
    }
    if (!c.normal_values.empty()) jc["normal"] = c.normal_values;
    if (!c.abnormal_values.empty()) jc["abnormal"] = c.abnormal_values;
    j["columns"].push_back(std::move(jc));
  }
  j["missing_values"] = missing_values;
  j["missing_policy"] = missing_policy == MissingPolicy::Drop ? "drop" : "error";
  return j.dump(2);
}

const ColumnSpec& Schema::sensitive_column() const {
  for (const auto& c : columns) {
    if (c.role == ColumnRole::Sensitive) return c;
  }
  throw ConfigError("schema has no sensitive column");
}

const ColumnSpec& Schema::label_column() const {
  for (const auto& c : columns) {
    if (c.role == ColumnRole::Label) return c;
  }
  throw ConfigError("schema has no label column");
}

std::vector<std::string> Schema::group_names() const {
  const auto& c = sensitive_column();
  if (!c.categories.empty()) return c.categories;
  std::vector<std::string> names;
  for (const auto& iv : c.intervals) names.push_back(interval_name(iv));
  names.push_back("others");
  return names;
}

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (features.rows() != n || sensitive.size() != n || row_ids.size() != n ||
      contaminated.size() != n) {
    throw ShapeError("dataset: misaligned lengths (features " + features.shape_string() +
                     ", labels " + std::to_string(n) + ", sensitive " +
                     std::to_string(sensitive.size()) + ")");
  }
  if (features.cols() != columns.size()) {
    throw ShapeError("dataset: " + std::to_string(features.cols()) + " feature columns but " +
                     std::to_string(columns.size()) + " descriptors");
  }
  for (int g : sensitive) {
    if (g < 0 || static_cast<std::size_t>(g) >= group_names.size()) {
      throw DataError("dataset: group id " + std::to_string(g) + " outside 0.." +
                      std::to_string(group_names.size()) + "-1");
    }
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("dataset: labels must be 0 or 1");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.gather_rows(indices);
  out.columns = columns;
  out.group_names = group_names;
  for (std::size_t i : indices) {
    out.sensitive.push_back(sensitive[i]);
    out.labels.push_back(labels[i]);
    out.row_ids.push_back(row_ids[i]);
    out.contaminated.push_back(contaminated[i]);
  }
  return out;
}

std::size_t Dataset::count(int group, int label) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < size(); ++i) c += (sensitive[i] == group && labels[i] == label) ? 1 : 0;
  return c;
}

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field");
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

Dataset parse_csv(const std::string& text, const Schema& schema) {
  validate_schema(schema);
  auto records = csv_records(text);
  if (records.empty()) throw ParseError("csv: empty file");

  const auto header = split_csv_record(records[0].second);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!position.emplace(header[i], i).second) {
      throw ParseError("csv: duplicate header column '" + header[i] + "'");
    }
  }
  for (const auto& c : schema.columns) {
    if (!position.count(c.name)) throw ParseError("csv: header lacks schema column '" + c.name + "'");
  }
  if (header.size() != schema.columns.size()) {
    std::string extra;
    for (const auto& h : header) {
      const bool known = std::any_of(schema.columns.begin(), schema.columns.end(),
                                     [&](const ColumnSpec& c) { return c.name == h; });
      if (!known) extra += (extra.empty() ? "" : ", ") + h;
    }
    throw ParseError("csv: header columns not in schema: " + extra);
  }

  Dataset ds;
  ds.group_names = schema.group_names();
  std::vector<const ColumnSpec*> feature_specs;
  for (const auto& c : schema.columns) {
    if (c.role == ColumnRole::Numeric) {
      ds.columns.push_back(FeatureColumn{c.name, FeatureKind::Numeric, {}});
      feature_specs.push_back(&c);
    } else if (c.role == ColumnRole::Categorical) {
      ds.columns.push_back(FeatureColumn{c.name, FeatureKind::Categorical, c.categories});
      feature_specs.push_back(&c);
    }
  }
  const ColumnSpec& sens = schema.sensitive_column();
  const ColumnSpec& lab = schema.label_column();
  const std::set<std::string> missing(schema.missing_values.begin(), schema.missing_values.end());

  std::vector<double> values;
  std::vector<double> row_values(feature_specs.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& [line_no, record] = records[r];
    if (trim(record).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_csv_record(record);
    } catch (const ParseError& e) {
      throw ParseError("csv line " + std::to_string(line_no) + ": " + e.what());
    }
    if (fields.size() != header.size()) {
      throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    auto where = [&](const std::string& col) {
      return "csv line " + std::to_string(line_no) + ", column '" + col + "': ";
    };

    bool has_missing = false;
    for (const auto& c : schema.columns) {
      if (c.role == ColumnRole::Ignore) continue;
      if (missing.count(fields[position[c.name]])) {
        if (schema.missing_policy == MissingPolicy::Error) {
          throw ParseError(where(c.name) + "missing value");
        }
        has_missing = true;
      }
    }
    if (has_missing) continue;

    for (std::size_t f = 0; f < feature_specs.size(); ++f) {
      const ColumnSpec& c = *feature_specs[f];
      const std::string& v = fields[position[c.name]];
      if (c.role == ColumnRole::Numeric) {
        if (!parse_double(v, row_values[f])) throw ParseError(where(c.name) + "cannot parse '" + v + "' as a number");
      } else {
        auto it = std::find(c.categories.begin(), c.categories.end(), v);
        if (it == c.categories.end()) throw ParseError(where(c.name) + "unknown category '" + v + "'");
        row_values[f] = static_cast<double>(it - c.categories.begin());
      }
    }

    const std::string& sv = fields[position[sens.name]];
    int group = 0;
    if (!sens.categories.empty()) {
      auto it = std::find(sens.categories.begin(), sens.categories.end(), sv);
      if (it == sens.categories.end()) throw ParseError(where(sens.name) + "unknown category '" + sv + "'");
      group = static_cast<int>(it - sens.categories.begin());
    } else {
      double x = 0.0;
      if (!parse_double(sv, x)) throw ParseError(where(sens.name) + "cannot parse '" + sv + "' as a number");
      group = static_cast<int>(sens.intervals.size());
      for (std::size_t k = 0; k < sens.intervals.size(); ++k) {
        if (x >= sens.intervals[k].first && x <= sens.intervals[k].second) {
          group = static_cast<int>(k);
          break;
        }
      }
    }

    const std::string& lv = fields[position[lab.name]];
    int label = 0;
    if (std::find(lab.normal_values.begin(), lab.normal_values.end(), lv) != lab.normal_values.end()) {
      label = 0;
    } else if (std::find(lab.abnormal_values.begin(), lab.abnormal_values.end(), lv) !=
               lab.abnormal_values.end()) {
      label = 1;
    } else {
      throw ParseError(where(lab.name) + "unknown label '" + lv + "'");
    }

    values.insert(values.end(), row_values.begin(), row_values.end());
    ds.sensitive.push_back(group);
    ds.labels.push_back(label);
    ds.row_ids.push_back(line_no);
    ds.contaminated.push_back(false);
  }
  const std::size_t n = ds.labels.size();
  ds.features = Matrix(n, feature_specs.size(), std::move(values));
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str(), schema);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Preprocessor Preprocessor::fit(const Dataset& train, PreprocessOptions options) {
  train.validate();
  if (train.size() == 0) throw DataError("preprocess: empty training split");
  Preprocessor p;
  p.options_ = options;
  p.source_columns_ = train.columns;
  p.num_groups_ = train.num_groups();
  const auto n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < train.columns.size(); ++c) {
    if (train.columns[c].kind == FeatureKind::Categorical) {
      p.means_.push_back(0.0);
      p.stds_.push_back(1.0);
      continue;
    }
    double mean = 0.0;
    for (std::size_t r = 0; r < train.size(); ++r) mean += train.features(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < train.size(); ++r) {
      const double d = train.features(r, c) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    if (sd == 0.0) p.warnings_.push_back("column '" + train.columns[c].name + "' is constant; emitted as zeros");
    p.means_.push_back(mean);
    p.stds_.push_back(sd);
  }
  return p;
}

Dataset Preprocessor::apply(const Dataset& ds) const {
  ds.validate();
  if (ds.columns.size() != source_columns_.size()) {
    throw ShapeError("preprocess: dataset has " + std::to_string(ds.columns.size()) +
                     " columns, fitted on " + std::to_string(source_columns_.size()));
  }
  std::vector<FeatureColumn> out_cols;
  for (const auto& c : source_columns_) {
    if (c.kind == FeatureKind::Numeric) {
      out_cols.push_back(FeatureColumn{c.name, FeatureKind::Numeric, {}});
    } else {
      for (const auto& cat : c.categories) out_cols.push_back(FeatureColumn{c.name + "=" + cat, FeatureKind::Numeric, {}});
    }
  }
  if (options_.include_sensitive) {
    for (std::size_t g = 0; g < num_groups_; ++g) {
      const std::string name = g < ds.group_names.size() ? ds.group_names[g] : std::to_string(g);
      out_cols.push_back(FeatureColumn{"group=" + name, FeatureKind::Numeric, {}});
    }
  }

  Matrix x(ds.size(), out_cols.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::size_t o = 0;
    for (std::size_t c = 0; c < source_columns_.size(); ++c) {
      const double v = ds.features(r, c);
      if (source_columns_[c].kind == FeatureKind::Numeric) {
        x(r, o++) = stds_[c] > 0.0 ? (v - means_[c]) / stds_[c] : 0.0;
      } else {
        const std::size_t k = source_columns_[c].categories.size();
        const auto code = static_cast<std::size_t>(v);
        if (v < 0.0 || code >= k) throw DataError("preprocess: category code out of range in '" + source_columns_[c].name + "'");
        x(r, o + code) = 1.0;
        o += k;
      }
    }
    if (options_.include_sensitive) x(r, o + static_cast<std::size_t>(ds.sensitive[r])) = 1.0;
  }

  Dataset out = ds;
  out.features = std::move(x);
  out.columns = std::move(out_cols);
  return out;
}

std::pair<Dataset, Dataset> preprocess(const Dataset& train, const Dataset& test,
                                       PreprocessOptions options, std::vector<std::string>* warnings) {
  const auto p = Preprocessor::fit(train, options);
  if (warnings) warnings->insert(warnings->end(), p.warnings().begin(), p.warnings().end());
  return {p.apply(train), p.apply(test)};
}

SplitPlan SplitPlan::per_group(std::span<const std::size_t> train_normal,
                               std::span<const std::size_t> test_normal,
                               std::span<const std::size_t> test_abnormal, std::uint64_t seed,
                               double contamination_rate) {
  if (train_normal.size() != test_normal.size() || train_normal.size() != test_abnormal.size()) {
    throw ConfigError("split plan: per-group count lists differ in length");
  }
  SplitPlan plan;
  plan.seed = seed;
  plan.contamination_rate = contamination_rate;
  for (std::size_t g = 0; g < train_normal.size(); ++g) {
    plan.cells.push_back(SplitCell{static_cast<int>(g), 0, train_normal[g], test_normal[g]});
    plan.cells.push_back(SplitCell{static_cast<int>(g), 1, 0, test_abnormal[g]});
  }
  return plan;
}

Split split(const Dataset& ds, const SplitPlan& plan) {
  ds.validate();
  if (!(plan.contamination_rate >= 0.0)) throw ConfigError("split plan: contamination rate must be >= 0");
  std::set<std::pair<int, int>> seen;
  for (const auto& cell : plan.cells) {
    if (cell.label != 0 && cell.label != 1) throw ConfigError("split plan: label must be 0 or 1");
    if (cell.label == 1 && cell.train_count > 0) {
      throw ConfigError("split plan: train cells may only request normal rows (group " +
                        std::to_string(cell.group) + ")");
    }
    if (!seen.insert({cell.group, cell.label}).second) {
      throw ConfigError("split plan: duplicate cell (group " + std::to_string(cell.group) +
                        ", label " + std::to_string(cell.label) + ")");
    }
  }

  std::map<std::pair<int, int>, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < ds.size(); ++i) members[{ds.sensitive[i], ds.labels[i]}].push_back(i);

  std::string deficient;
  for (const auto& cell : plan.cells) {
    const std::size_t have = members[{cell.group, cell.label}].size();
    const std::size_t want = cell.train_count + cell.test_count;
    if (want > have) {
      deficient += (deficient.empty() ? "" : "; ") + std::string("group ") + std::to_string(cell.group) +
                   " label " + std::to_string(cell.label) + ": need " + std::to_string(want) +
                   ", have " + std::to_string(have);
    }
  }
  if (!deficient.empty()) throw DataError("split plan infeasible: " + deficient);

  std::vector<std::size_t> train_idx, test_idx, leftover_abnormal;
  for (const auto& cell : plan.cells) {
    auto pool = members[{cell.group, cell.label}];
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(cell.group) * 2 +
                                       static_cast<std::uint64_t>(cell.label)));
    rng.shuffle(pool);
    train_idx.insert(train_idx.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cell.train_count));
    const auto test_end = pool.begin() + static_cast<std::ptrdiff_t>(cell.train_count + cell.test_count);
    test_idx.insert(test_idx.end(), pool.begin() + static_cast<std::ptrdiff_t>(cell.train_count), test_end);
    if (cell.label == 1) leftover_abnormal.insert(leftover_abnormal.end(), test_end, pool.end());
  }
  // Abnormal rows of groups without a plan cell are also unused.
  for (const auto& [key, rows] : members) {
    if (key.second == 1 && !seen.count(key)) leftover_abnormal.insert(leftover_abnormal.end(), rows.begin(), rows.end());
  }

  Split out{ds.subset(train_idx), ds.subset(test_idx)};
  if (plan.contamination_rate > 0.0) {
    std::sort(leftover_abnormal.begin(), leftover_abnormal.end());
    out.train = contaminate(out.train, ds.subset(leftover_abnormal), plan.contamination_rate,
                            derive_seed(plan.seed, 1u << 20));
  }
  return out;
}

Dataset contaminate(const Dataset& train, const Dataset& source_abnormal, double rate,
                    std::uint64_t seed) {
  if (!(rate >= 0.0)) throw ConfigError("contaminate: rate must be >= 0");
  std::size_t normals = 0;
  for (int l : train.labels) normals += l == 0 ? 1 : 0;
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(normals) + 1e-9));
  if (count == 0) return train;
  for (int l : source_abnormal.labels) {
    if (l != 1) throw DataError("contaminate: source rows must all be abnormal");
  }
  if (source_abnormal.size() < count) {
    throw DataError("contaminate: need " + std::to_string(count) + " abnormal rows, have " +
                    std::to_string(source_abnormal.size()));
  }
  if (source_abnormal.features.cols() != train.features.cols()) {
    throw ShapeError("contaminate: column counts differ");
  }
  std::vector<std::size_t> order(source_abnormal.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(count);
  Dataset extra = source_abnormal.subset(order);

  Dataset out = train;
  const Matrix parts[] = {train.features, extra.features};
  out.features = vstack(parts);
  for (std::size_t i = 0; i < extra.size(); ++i) {
    out.sensitive.push_back(extra.sensitive[i]);
    out.labels.push_back(1);
    out.row_ids.push_back(extra.row_ids[i]);
    out.contaminated.push_back(true);
  }
  return out;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.dim == 0) throw ConfigError("synthetic: dim must be positive");
  Rng rng(spec.seed);
  Dataset ds;
  ds.group_names = {"g0", "g1"};
  for (std::size_t c = 0; c < spec.dim; ++c) ds.columns.push_back(FeatureColumn{"x" + std::to_string(c), FeatureKind::Numeric, {}});
  std::vector<double> values;
  std::size_t id = 0;
  for (int g = 0; g < 2; ++g) {
    const double shift = g == 1 ? spec.group_shift : 0.0;
    for (int label = 0; label < 2; ++label) {
      const std::size_t n = label == 0 ? spec.normal_per_group : spec.abnormal_per_group;
      const double scale = label == 0 ? 1.0 : spec.anomaly_scale;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < spec.dim; ++c) values.push_back((c == 0 ? shift : 0.0) + scale * rng.normal());
        ds.sensitive.push_back(g);
        ds.labels.push_back(label);
        ds.row_ids.push_back(id++);
        ds.contaminated.push_back(false);
      }
    }
  }
  ds.features = Matrix(ds.labels.size(), spec.dim, std::move(values));
  return ds;
}

Schema schema_for(const Dataset& ds) {
  Schema s;
  for (const auto& c : ds.columns) {
    ColumnSpec spec;
    spec.name = c.name;
    spec.role = c.kind == FeatureKind::Numeric ? ColumnRole::Numeric : ColumnRole::Categorical;
    spec.categories = c.categories;
    s.columns.push_back(std::move(spec));
  }
  ColumnSpec group;
  group.name = "group";
  group.role = ColumnRole::Sensitive;
  group.categories = ds.group_names;
  s.columns.push_back(std::move(group));
  ColumnSpec label;
  label.name = "label";
  label.role = ColumnRole::Label;
  label.normal_values = {"normal"};
  label.abnormal_values = {"abnormal"};
  s.columns.push_back(std::move(label));
  return s;
}

void write_csv(const Dataset& ds, const std::filesystem::path& csv_path) {
  ds.validate();
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write " + csv_path.string());
  for (const auto& c : ds.columns) out << c.name << ',';
  out << "group,label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      const double v = ds.features(r, c);
      if (ds.columns[c].kind == FeatureKind::Numeric) out << format_double(v);
      else out << ds.columns[c].categories.at(static_cast<std::size_t>(v));
      out << ',';
    }
    out << ds.group_names[static_cast<std::size_t>(ds.sensitive[r])] << ','
        << (ds.labels[r] == 1 ? "abnormal" : "normal") << '\n';
  }
}

}  // namespace fairad::data
