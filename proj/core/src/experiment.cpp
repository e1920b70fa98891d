#include "fairad/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairad/error.hpp"

namespace fairad::harness {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_double(double v, std::uint64_t h) { return fnv1a(&v, sizeof v, h); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string p_suffix(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "@%g", p);
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

json ratio_json(const metrics::FairnessRatio& r) { return {{"value", r.value}, {"undefined", r.undefined}}; }

metrics::FairnessRatio ratio_from(const json& j) {
  return {j.at("value").get<double>(), j.at("undefined").get<bool>()};
}

json report_to_json(const metrics::FairnessReport& r) {
  json j;
  j["p"] = r.p;
  j["threshold"] = r.threshold;
  j["auc"] = optional_number(r.auc);
  j["f1"] = optional_number(r.f1);
  j["adpd_all"] = r.adpd_all;
  j["adpd_normal"] = optional_number(r.adpd_normal);
  j["adpd_abnormal"] = optional_number(r.adpd_abnormal);
  j["fairness_ratio_all"] = ratio_json(r.fairness_ratio_all);
  j["fairness_ratio_normal"] = r.fairness_ratio_normal ? ratio_json(*r.fairness_ratio_normal) : json(nullptr);
  j["eo"] = optional_number(r.eo);
  json sizes = json::array();
  for (const auto& s : r.subset_sizes) sizes.push_back({{"group", s.group}, {"label", s.label}, {"count", s.count}});
  j["subset_sizes"] = std::move(sizes);
  j["notices"] = r.notices;
  return j;
}

metrics::FairnessReport report_from_json(const json& j) {
  metrics::FairnessReport r;
  r.p = j.at("p").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.auc = read_optional(j, "auc");
  r.f1 = read_optional(j, "f1");
  r.adpd_all = j.at("adpd_all").get<double>();
  r.adpd_normal = read_optional(j, "adpd_normal");
  r.adpd_abnormal = read_optional(j, "adpd_abnormal");
  r.fairness_ratio_all = ratio_from(j.at("fairness_ratio_all"));
  if (!j.at("fairness_ratio_normal").is_null()) r.fairness_ratio_normal = ratio_from(j["fairness_ratio_normal"]);
  r.eo = read_optional(j, "eo");
  for (const auto& s : j.at("subset_sizes")) {
    r.subset_sizes.push_back({s.at("group").get<int>(), s.at("label").get<int>(), s.at("count").get<std::size_t>()});
  }
  r.notices = j.at("notices").get<std::vector<std::string>>();
  return r;
}

std::string_view divergence_name(model::DivergenceKind k) {
  return k == model::DivergenceKind::Sinkhorn ? "sinkhorn" : "mmd";
}

json train_to_json(const model::TrainConfig& t) {
  const auto& a = t.architecture;
  return {{"beta", t.beta},
          {"lambda", t.lambda},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"embedding_dim", t.target.dim},
          {"truncation_radius", t.target.radius},
          {"target_seed", t.target.seed},
          {"resample_target", t.resample_target},
          {"min_group_batch", t.min_group_batch},
          {"encoder_hidden", a.encoder_hidden},
          {"decoder_hidden", a.decoder_hidden},
          {"hidden_activation", nn::to_string(a.hidden_activation)},
          {"divergence",
           {{"kind", divergence_name(t.divergence.kind)},
            {"alpha", t.divergence.sinkhorn.alpha},
            {"max_iter", t.divergence.sinkhorn.max_iter},
            {"tol", t.divergence.sinkhorn.tol},
            {"mmd_gamma", t.divergence.mmd_gamma}}}};
}

model::TrainConfig train_from_json(const json& j) {
  model::TrainConfig t;
  t.beta = j.value("beta", t.beta);
  t.lambda = j.value("lambda", t.lambda);
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  const auto dim = j.value("embedding_dim", t.target.dim);
  t.target = make_target(dim, j.value("target_seed", std::uint64_t{0}));
  if (j.contains("truncation_radius")) t.target.radius = j["truncation_radius"].get<double>();
  t.resample_target = j.value("resample_target", t.resample_target);
  t.min_group_batch = j.value("min_group_batch", t.min_group_batch);
  if (j.contains("encoder_hidden")) t.architecture.encoder_hidden = j["encoder_hidden"].get<std::vector<std::size_t>>();
  if (j.contains("decoder_hidden")) t.architecture.decoder_hidden = j["decoder_hidden"].get<std::vector<std::size_t>>();
  if (j.contains("hidden_activation")) {
    t.architecture.hidden_activation = nn::activation_from_string(j["hidden_activation"].get<std::string>());
  }
  if (j.contains("divergence")) {
    const auto& d = j["divergence"];
    const auto kind = d.value("kind", std::string("sinkhorn"));
    if (kind == "sinkhorn") t.divergence.kind = model::DivergenceKind::Sinkhorn;
    else if (kind == "mmd") t.divergence.kind = model::DivergenceKind::Mmd;
    else throw ConfigError("config: unknown divergence '" + kind + "'");
    t.divergence.sinkhorn.alpha = d.value("alpha", t.divergence.sinkhorn.alpha);
    t.divergence.sinkhorn.max_iter = d.value("max_iter", t.divergence.sinkhorn.max_iter);
    t.divergence.sinkhorn.tol = d.value("tol", t.divergence.sinkhorn.tol);
    t.divergence.mmd_gamma = d.value("mmd_gamma", t.divergence.mmd_gamma);
  }
  return t;
}

json synthetic_to_json(const data::SyntheticSpec& s) {
  return {{"dim", s.dim},
          {"normal_per_group", s.normal_per_group},
          {"abnormal_per_group", s.abnormal_per_group},
          {"group_shift", s.group_shift},
          {"anomaly_scale", s.anomaly_scale},
          {"seed", s.seed}};
}

data::SyntheticSpec synthetic_from_json(const json& j) {
  data::SyntheticSpec s;
  s.dim = j.value("dim", s.dim);
  s.normal_per_group = j.value("normal_per_group", s.normal_per_group);
  s.abnormal_per_group = j.value("abnormal_per_group", s.abnormal_per_group);
  s.group_shift = j.value("group_shift", s.group_shift);
  s.anomaly_scale = j.value("anomaly_scale", s.anomaly_scale);
  s.seed = j.value("seed", s.seed);
  return s;
}

/// Configuration without the output path; this is what the hash covers.
json config_core_json(const ExperimentConfig& c) {
  json ds{{"name", c.dataset.name}, {"include_sensitive", c.dataset.include_sensitive}};
  if (c.dataset.synthetic) {
    ds["synthetic"] = synthetic_to_json(*c.dataset.synthetic);
  } else {
    ds["csv"] = c.dataset.csv.generic_string();
    ds["schema"] = c.dataset.schema.generic_string();
  }
  return {{"name", c.name},
          {"dataset", ds},
          {"split",
           {{"train_normal", c.split.train_normal},
            {"test_normal", c.split.test_normal},
            {"test_abnormal", c.split.test_abnormal},
            {"contamination_rate", c.split.contamination_rate}}},
          {"variant", model::to_string(c.variant)},
          {"train", train_to_json(c.train)},
          {"p_values", c.p_values},
          {"repetitions", c.repetitions},
          {"base_seed", c.base_seed}};
}

std::filesystem::path resolve_data_path(const std::filesystem::path& p, const std::filesystem::path& base_dir) {
  if (p.empty() || p.is_absolute()) return p;
  if (const char* env = std::getenv("FAIRAD_DATA_DIR"); env && *env) return std::filesystem::path(env) / p;
  return base_dir.empty() ? p : base_dir / p;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
  if (p_values.empty()) throw ConfigError("config: p_values must not be empty");
  for (double p : p_values) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("config: p values must lie in (0, 1]");
  }
  const std::size_t k = split.train_normal.size();
  if (k < 2 || split.test_normal.size() != k || split.test_abnormal.size() != k) {
    throw ConfigError("config: split lists need one entry per group (at least 2)");
  }
  if (!(split.contamination_rate >= 0.0)) throw ConfigError("config: contamination_rate must be >= 0");
  if (!dataset.synthetic && (dataset.csv.empty() || dataset.schema.empty())) {
    throw ConfigError("config: dataset needs csv and schema paths or a synthetic block");
  }
  train.validate();
}

std::string ExperimentConfig::method_name() const {
  return variant == model::Variant::Im ? "Im-FairAD" : "Ex-FairAD";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.name = j.value("name", std::string("experiment"));
    const auto& ds = j.at("dataset");
    c.dataset.name = ds.value("name", std::string());
    c.dataset.include_sensitive = ds.value("include_sensitive", false);
    c.dataset.base_dir = base_dir;
    if (ds.contains("synthetic")) {
      c.dataset.synthetic = synthetic_from_json(ds["synthetic"]);
    } else {
      c.dataset.csv = ds.at("csv").get<std::string>();
      c.dataset.schema = ds.at("schema").get<std::string>();
    }
    const auto& sp = j.at("split");
    c.split.train_normal = sp.at("train_normal").get<std::vector<std::size_t>>();
    c.split.test_normal = sp.at("test_normal").get<std::vector<std::size_t>>();
    c.split.test_abnormal = sp.at("test_abnormal").get<std::vector<std::size_t>>();
    c.split.contamination_rate = sp.value("contamination_rate", 0.0);
    c.variant = model::variant_from_string(j.value("variant", std::string("im")));
    if (j.contains("train")) c.train = train_from_json(j["train"]);
    if (j.contains("p_values")) c.p_values = j["p_values"].get<std::vector<double>>();
    c.repetitions = j.value("repetitions", c.repetitions);
    c.base_seed = j.value("base_seed", c.base_seed);
    if (j.contains("output")) c.output = j["output"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json_text(read_text(path), path.parent_path());
}

std::string ExperimentConfig::to_json_text() const {
  json j = config_core_json(*this);
  if (!output.empty()) j["output"] = output.generic_string();
  return j.dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string canon = config_core_json(*this).dump();
  return fnv1a(canon.data(), canon.size());
}

bool RunReport::ok() const {
  for (const auto& r : repetitions) {
    if (r.failure) return false;
  }
  return !repetitions.empty();
}

const Aggregate* RunReport::find(const std::string& metric) const {
  for (const auto& a : aggregates) {
    if (a.metric == metric) return &a;
  }
  return nullptr;
}

std::string RunReport::to_json_text() const {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["name"] = name;
  j["method"] = method;
  j["dataset"] = dataset;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  json reps = json::array();
  for (const auto& r : repetitions) {
    json jr{{"index", r.index}, {"seed", r.seed}, {"failure", r.failure ? json(*r.failure) : json(nullptr)}};
    jr["history"] = {{"epochs", r.history.epochs},
                     {"final_total", r.history.final_total},
                     {"final_sinkhorn", r.history.final_sinkhorn},
                     {"final_reconstruction", r.history.final_reconstruction},
                     {"final_fairness", r.history.final_fairness},
                     {"hash", r.history.hash}};
    json reports = json::array();
    for (const auto& rep : r.reports) reports.push_back(report_to_json(rep));
    jr["reports"] = std::move(reports);
    reps.push_back(std::move(jr));
  }
  j["repetitions"] = std::move(reps);
  json aggs = json::array();
  for (const auto& a : aggregates) aggs.push_back({{"metric", a.metric}, {"mean", a.mean}, {"std", a.std}, {"count", a.count}});
  j["aggregates"] = std::move(aggs);
  return j.dump(2);
}

RunReport RunReport::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kReportFormatVersion) {
      throw ParseError("report: unsupported format_version");
    }
    RunReport r;
    r.name = j.at("name").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::uint64_t>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& jr : j.at("repetitions")) {
      RepetitionResult rep;
      rep.index = jr.at("index").get<std::size_t>();
      rep.seed = jr.at("seed").get<std::uint64_t>();
      if (!jr.at("failure").is_null()) rep.failure = jr["failure"].get<std::string>();
      const auto& h = jr.at("history");
      rep.history.epochs = h.at("epochs").get<std::size_t>();
      rep.history.final_total = h.at("final_total").get<double>();
      rep.history.final_sinkhorn = h.at("final_sinkhorn").get<double>();
      rep.history.final_reconstruction = h.at("final_reconstruction").get<double>();
      rep.history.final_fairness = h.at("final_fairness").get<double>();
      rep.history.hash = h.at("hash").get<std::uint64_t>();
      for (const auto& jrep : jr.at("reports")) rep.reports.push_back(report_from_json(jrep));
      r.repetitions.push_back(std::move(rep));
    }
    for (const auto& ja : j.at("aggregates")) {
      r.aggregates.push_back({ja.at("metric").get<std::string>(), ja.at("mean").get<double>(),
                              ja.at("std").get<double>(), ja.at("count").get<std::size_t>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::vector<Aggregate> aggregate(const std::vector<RepetitionResult>& reps,
                                 const std::vector<double>& p_values) {
  // Metric name -> values in repetition order.
  std::vector<std::pair<std::string, std::vector<double>>> table;
  auto add = [&](const std::string& name, const std::optional<double>& v) {
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == name; });
    if (it == table.end()) {
      table.emplace_back(name, std::vector<double>{});
      it = table.end() - 1;
    }
    if (v) it->second.push_back(*v);
  };
  for (const auto& rep : reps) {
    if (rep.failure || rep.reports.empty()) continue;
    const auto& first = rep.reports.front();
    add("auc", first.auc);
    add("adpd_all", first.adpd_all);
    add("adpd_normal", first.adpd_normal);
    add("adpd_abnormal", first.adpd_abnormal);
    for (std::size_t k = 0; k < rep.reports.size() && k < p_values.size(); ++k) {
      const auto& r = rep.reports[k];
      const std::string s = p_suffix(p_values[k]);
      add("f1" + s, r.f1);
      add("fairness_ratio_all" + s, r.fairness_ratio_all.value);
      add("fairness_ratio_normal" + s,
          r.fairness_ratio_normal ? std::optional<double>(r.fairness_ratio_normal->value) : std::nullopt);
      add("eo" + s, r.eo);
    }
  }
  std::vector<Aggregate> out;
  for (const auto& [name, values] : table) {
    Aggregate a;
    a.metric = name;
    a.count = values.size();
    if (a.count == 0) continue;
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(a.count);
    if (a.count > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - a.mean) * (v - a.mean);
      a.std = std::sqrt(ss / static_cast<double>(a.count - 1));
    }
    out.push_back(std::move(a));
  }
  return out;
}

data::Dataset load_dataset(const DatasetSource& source) {
  if (source.synthetic) return data::make_synthetic(*source.synthetic);
  const auto schema = data::Schema::load(resolve_data_path(source.schema, source.base_dir));
  return data::load_csv(resolve_data_path(source.csv, source.base_dir), schema);
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, const data::Dataset& full, std::size_t index) {
  RepetitionResult rep;
  rep.index = index;
  rep.seed = cfg.base_seed + index;
  try {
    if (full.num_groups() != cfg.split.train_normal.size()) {
      throw ConfigError("config: split lists have " + std::to_string(cfg.split.train_normal.size()) +
                        " groups but the dataset has " + std::to_string(full.num_groups()));
    }
    const auto plan = data::SplitPlan::per_group(cfg.split.train_normal, cfg.split.test_normal,
                                                 cfg.split.test_abnormal, rep.seed,
                                                 cfg.split.contamination_rate);
    const auto parts = data::split(full, plan);
    const auto [train, test] = data::preprocess(parts.train, parts.test, {cfg.dataset.include_sensitive});

    auto tc = cfg.train;
    tc.seed = rep.seed;
    const auto model = model::train(cfg.variant, train.features, train.sensitive, tc);

    const auto train_scores = model::score(model, train.features);
    const auto table = model::score_dataset(model, test.features, test.sensitive, test.labels);
    for (double p : cfg.p_values) rep.reports.push_back(metrics::evaluate(table, train_scores, p));

    rep.history.epochs = model.history.size();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : model.history) {
      for (double v : {e.total, e.sinkhorn_total, e.reconstruction, e.fairness_term}) h = hash_double(v, h);
      for (double v : e.group_transport_cost) h = hash_double(v, h);
    }
    rep.history.hash = h;
    if (!model.history.empty()) {
      const auto& last = model.history.back();
      rep.history.final_total = last.total;
      rep.history.final_sinkhorn = last.sinkhorn_total;
      rep.history.final_reconstruction = last.reconstruction;
      rep.history.final_fairness = last.fairness_term;
    }
  } catch (const Error& e) {
    rep.reports.clear();
    rep.failure = e.what();
  }
  return rep;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.name = cfg.name;
  report.method = cfg.method_name();
  report.dataset = cfg.dataset.name;
  report.config_hash = cfg.hash();
  for (std::size_t i = 0; i < cfg.repetitions; ++i) report.seeds.push_back(cfg.base_seed + i);

  std::optional<data::Dataset> full;
  try {
    full = load_dataset(cfg.dataset);
  } catch (const Error& e) {
    for (std::size_t i = 0; i < cfg.repetitions; ++i) {
      RepetitionResult rep;
      rep.index = i;
      rep.seed = cfg.base_seed + i;
      rep.failure = std::string("dataset: ") + e.what();
      report.repetitions.push_back(std::move(rep));
    }
    return report;
  }
  for (std::size_t i = 0; i < cfg.repetitions; ++i) report.repetitions.push_back(run_repetition(cfg, *full, i));
  report.aggregates = aggregate(report.repetitions, cfg.p_values);
  return report;
}

SweepParam sweep_param_from_string(const std::string& name) {
  if (name == "beta") return SweepParam::Beta;
  if (name == "lambda") return SweepParam::Lambda;
  throw ConfigError("sweep: unknown parameter '" + name + "' (expected beta or lambda)");
}

std::vector<RunReport> sweep(const ExperimentConfig& cfg, SweepParam param, const std::vector<double>& values) {
  if (param == SweepParam::Lambda && cfg.variant != model::Variant::Ex) {
    throw ConfigError("sweep: lambda only applies to the Ex variant");
  }
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::vector<RunReport> out;
  for (double v : values) {
    auto c = cfg;
    if (param == SweepParam::Beta) c.train.beta = v;
    else c.train.lambda = v;
    out.push_back(run_experiment(c));
  }
  return out;
}

std::string sweep_table_csv(SweepParam param, const std::vector<double>& values,
                            const std::vector<RunReport>& reports) {
  if (values.size() != reports.size()) throw ShapeError("sweep table: values and reports differ in length");
  std::ostringstream os;
  os << (param == SweepParam::Beta ? "beta" : "lambda") << ",auc_mean,auc_std,adpd_all_mean,adpd_all_std\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto* auc = reports[i].find("auc");
    const auto* adpd = reports[i].find("adpd_all");
    os << format_double(values[i]) << ',' << format_double(auc ? auc->mean : nan) << ','
       << format_double(auc ? auc->std : nan) << ',' << format_double(adpd ? adpd->mean : nan) << ','
       << format_double(adpd ? adpd->std : nan) << '\n';
  }
  return os.str();
}

ScoreTable parse_score_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  const auto header = data::split_csv_record(line);
  int score_col = -1, group_col = -1, label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "score") score_col = static_cast<int>(i);
    else if (header[i] == "group") group_col = static_cast<int>(i);
    else if (header[i] == "label") label_col = static_cast<int>(i);
    else throw ParseError("scores line " + std::to_string(line_no) + ": unexpected column '" + header[i] + "'");
  }
  if (score_col < 0 || group_col < 0) {
    throw ParseError("scores line " + std::to_string(line_no) + ": header needs score and group columns");
  }
  ScoreTable t;
  if (label_col >= 0) t.labels.emplace();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "scores line " + std::to_string(line_no) + ": ";
    const auto fields = data::split_csv_record(line);
    if (fields.size() != header.size()) {
      throw ParseError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    char* end = nullptr;
    const auto& sf = fields[static_cast<std::size_t>(score_col)];
    const double s = std::strtod(sf.c_str(), &end);
    if (sf.empty() || *end != '\0' || !std::isfinite(s)) throw ParseError(where + "bad score '" + sf + "'");
    auto parse_int = [&](const std::string& f, const char* what) {
      char* e = nullptr;
      const long v = std::strtol(f.c_str(), &e, 10);
      if (f.empty() || *e != '\0' || v < 0 || v > std::numeric_limits<int>::max()) {
        throw ParseError(where + "bad " + what + " '" + f + "'");
      }
      return static_cast<int>(v);
    };
    t.scores.push_back(s);
    t.group_ids.push_back(parse_int(fields[static_cast<std::size_t>(group_col)], "group"));
    if (label_col >= 0) {
      const int l = parse_int(fields[static_cast<std::size_t>(label_col)], "label");
      if (l > 1) throw ParseError(where + "label must be 0 or 1");
      t.labels->push_back(l);
    }
  }
  if (t.scores.empty()) throw ParseError("scores: no data rows");
  return t;
}

ScoreTable read_score_csv(const std::filesystem::path& path) {
  try {
    return parse_score_csv(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string score_table_csv(const ScoreTable& table) {
  table.validate();
  std::ostringstream os;
  os << (table.labels ? "score,group,label\n" : "score,group\n");
  for (std::size_t i = 0; i < table.size(); ++i) {
    os << format_double(table.scores[i]) << ',' << table.group_ids[i];
    if (table.labels) os << ',' << (*table.labels)[i];
    os << '\n';
  }
  return os.str();
}

std::vector<metrics::FairnessReport> eval_scores(const ScoreTable& table, const std::vector<double>& p_values,
                                                 const std::optional<std::vector<double>>& train_scores) {
  std::vector<metrics::FairnessReport> out;
  const std::span<const double> ref = train_scores ? std::span<const double>(*train_scores)
                                                   : std::span<const double>(table.scores);
  for (double p : p_values) {
    auto r = metrics::evaluate(table, ref, p);
    if (!train_scores) r.notices.push_back("threshold taken from the evaluated scores");
    out.push_back(std::move(r));
  }
  return out;
}

std::string fairness_report_json(const metrics::FairnessReport& report) { return report_to_json(report).dump(2); }

std::vector<TradeoffRow> tradeoff_rows(const std::vector<RunReport>& reports) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto mean = [&](const RunReport& r, const char* m) {
    const auto* a = r.find(m);
    return a ? a->mean : nan;
  };
  std::vector<TradeoffRow> rows;
  for (const auto& r : reports) {
    rows.push_back({r.method, r.dataset, mean(r, "auc"), mean(r, "adpd_all"), mean(r, "adpd_normal"),
                    mean(r, "adpd_abnormal")});
  }
  return rows;
}

std::string export_tradeoff(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  os << "method,dataset,auc,adpd_all,adpd_normal,adpd_abnormal\n";
  for (const auto& row : tradeoff_rows(reports)) {
    os << row.method << ',' << row.dataset << ',' << format_double(row.auc) << ',' << format_double(row.adpd_all)
       << ',' << format_double(row.adpd_normal) << ',' << format_double(row.adpd_abnormal) << '\n';
  }
  return os.str();
}

std::vector<TradeoffRow> parse_tradeoff_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<TradeoffRow> rows;
  auto num = [&](const std::string& f) {
    if (f == "nan" || f == "-nan") return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(f.c_str(), &end);
    if (f.empty() || *end != '\0') throw ParseError("tradeoff line " + std::to_string(line_no) + ": bad number '" + f + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "method,dataset,auc,adpd_all,adpd_normal,adpd_abnormal") {
        throw ParseError("tradeoff line 1: unexpected header");
      }
      continue;
    }
    const auto f = data::split_csv_record(line);
    if (f.size() != 6) throw ParseError("tradeoff line " + std::to_string(line_no) + ": expected 6 fields");
    rows.push_back({f[0], f[1], num(f[2]), num(f[3]), num(f[4]), num(f[5])});
  }
  return rows;
}

}  // namespace fairad::harness
