#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairad/error.hpp"
#include "fairad/experiment.hpp"
#include "fairad/model_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fairad;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

// Command-line values for keys that can also appear in the config file.
struct Overrides {
  std::optional<std::string> variant;
  std::optional<std::size_t> repetitions;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> beta;
  std::optional<double> lambda;
  std::optional<double> learning_rate;
  std::optional<std::string> p_values;
  std::optional<std::string> output;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--variant", variant, "im or ex");
    cmd->add_option("--repetitions", repetitions);
    cmd->add_option("--seed", base_seed, "base seed; repetition i uses seed + i");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--beta", beta);
    cmd->add_option("--lambda", lambda);
    cmd->add_option("--lr", learning_rate);
    cmd->add_option("--p", p_values, "comma-separated percentiles");
    cmd->add_option("--out", output, "report path");
  }
};

template <class T>
void merge(json& obj, const char* key, const std::optional<T>& v, const std::string& where) {
  if (!v) return;
  if (obj.contains(key)) {
    std::cerr << "warning: " << where << key << " is set in the config file; ignoring the command-line value\n";
    return;
  }
  obj[key] = *v;
}

harness::ExperimentConfig load_config(const fs::path& path, const Overrides& o) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  merge(j, "variant", o.variant, "");
  merge(j, "repetitions", o.repetitions, "");
  merge(j, "base_seed", o.base_seed, "");
  merge(j, "output", o.output, "");
  if (o.p_values) {
    std::optional<std::vector<double>> ps = parse_list(*o.p_values);
    merge(j, "p_values", ps, "");
  }
  json& t = j["train"];
  if (t.is_null()) t = json::object();
  merge(t, "epochs", o.epochs, "train.");
  merge(t, "batch_size", o.batch_size, "train.");
  merge(t, "beta", o.beta, "train.");
  merge(t, "lambda", o.lambda, "train.");
  merge(t, "learning_rate", o.learning_rate, "train.");
  // Relative data paths resolve against FAIRAD_DATA_DIR, else ./data.
  return harness::ExperimentConfig::from_json_text(j.dump(), "data");
}

void print_summary(const harness::RunReport& r) {
  std::printf("%s on %s, %zu repetition(s)\n", r.method.c_str(), r.dataset.c_str(), r.repetitions.size());
  for (const auto& rep : r.repetitions) {
    if (rep.failure) std::printf("  repetition %zu (seed %llu) failed: %s\n", rep.index,
                                 static_cast<unsigned long long>(rep.seed), rep.failure->c_str());
  }
  for (const auto& a : r.aggregates) {
    std::printf("  %-26s %.6f +- %.6f  (n=%zu)\n", a.metric.c_str(), a.mean, a.std, a.count);
  }
}

fs::path report_path(const harness::ExperimentConfig& cfg) {
  if (!cfg.output.empty()) return cfg.output;
  return fs::path("reports") / (cfg.name + ".json");
}

// Reproduces the split and preprocessing of one repetition.
struct Prepared {
  data::Dataset train;
  data::Dataset test;
  std::uint64_t seed = 0;
};

Prepared prepare(const harness::ExperimentConfig& cfg, std::size_t rep) {
  const auto full = harness::load_dataset(cfg.dataset);
  Prepared p;
  p.seed = cfg.base_seed + rep;
  const auto plan = data::SplitPlan::per_group(cfg.split.train_normal, cfg.split.test_normal, cfg.split.test_abnormal,
                                               p.seed, cfg.split.contamination_rate);
  const auto parts = data::split(full, plan);
  std::vector<std::string> warnings;
  auto [tr, te] = data::preprocess(parts.train, parts.test, {cfg.dataset.include_sensitive}, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  p.train = std::move(tr);
  p.test = std::move(te);
  return p;
}

int cmd_run(const fs::path& config, const Overrides& o) {
  const auto cfg = load_config(config, o);
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = harness::run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto out = report_path(cfg);
  write_file(out, report.to_json_text());
  print_summary(report);
  std::printf("report: %s (%.1fs)\n", out.string().c_str(), secs);
  return report.ok() ? 0 : 1;
}

int cmd_sweep(const fs::path& config, const Overrides& o, const std::string& param, const std::string& values,
              const std::optional<fs::path>& table_out) {
  const auto cfg = load_config(config, o);
  const auto which = harness::sweep_param_from_string(param);
  const auto vals = parse_list(values);
  const auto reports = harness::sweep(cfg, which, vals);
  const fs::path base = report_path(cfg);
  bool ok = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    char suffix[64];
    std::snprintf(suffix, sizeof suffix, "_%s%g.json", param.c_str(), vals[i]);
    fs::path p = base;
    p.replace_filename(base.stem().string() + suffix);
    write_file(p, reports[i].to_json_text());
    ok = ok && reports[i].ok();
  }
  const auto table = harness::sweep_table_csv(which, vals, reports);
  const fs::path tp = table_out ? *table_out : base.parent_path() / (base.stem().string() + "_" + param + "_sweep.csv");
  write_file(tp, table);
  std::cout << table;
  std::printf("table: %s\n", tp.string().c_str());
  return ok ? 0 : 1;
}

int cmd_train(const fs::path& config, const Overrides& o, std::size_t rep, const fs::path& model_out) {
  const auto cfg = load_config(config, o);
  const auto p = prepare(cfg, rep);
  auto tc = cfg.train;
  tc.seed = p.seed;
  const auto model = model::train(cfg.variant, p.train.features, p.train.sensitive, tc,
                                  [&](std::size_t epoch, const model::EpochStats& s) {
                                    if ((epoch + 1) % 10 == 0 || epoch + 1 == tc.epochs) {
                                      std::printf("epoch %4zu  loss %.6f  sinkhorn %.6f  recon %.6f  fair %.6f\n",
                                                  epoch + 1, s.total, s.sinkhorn_total, s.reconstruction,
                                                  s.fairness_term);
                                    }
                                  });
  model::save_model(model_out, model, cfg.hash());
  std::printf("model: %s\n", model_out.string().c_str());
  return 0;
}

int cmd_eval(const fs::path& config, const Overrides& o, std::size_t rep, const fs::path& model_path,
             const std::optional<fs::path>& scores_out) {
  const auto cfg = load_config(config, o);
  std::uint64_t hash = 0;
  const auto model = model::load_model(model_path, &hash);
  if (hash != cfg.hash()) std::cerr << "warning: model was trained under a different config\n";
  const auto p = prepare(cfg, rep);
  const auto train_scores = model::score(model, p.train.features);
  const auto table = model::score_dataset(model, p.test.features, p.test.sensitive, p.test.labels);
  if (scores_out) write_file(*scores_out, harness::score_table_csv(table));
  for (double pv : cfg.p_values) std::cout << harness::fairness_report_json(metrics::evaluate(table, train_scores, pv)) << "\n";
  return 0;
}

int cmd_metrics(const fs::path& scores, const std::string& ps, const std::optional<fs::path>& train_scores) {
  const auto table = harness::read_score_csv(scores);
  std::optional<std::vector<double>> train;
  if (train_scores) train = harness::read_score_csv(*train_scores).scores;
  for (const auto& r : harness::eval_scores(table, parse_list(ps), train)) {
    std::cout << harness::fairness_report_json(r) << "\n";
  }
  return 0;
}

int cmd_export(const fs::path& dir, const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<harness::RunReport> reports;
  for (const auto& f : files) {
    try {
      reports.push_back(harness::RunReport::from_json_text(read_file(f)));
    } catch (const ParseError& e) {
      std::cerr << "skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  if (reports.empty()) throw DataError("no run reports in " + dir.string());
  write_file(out, harness::export_tradeoff(reports));
  std::printf("%zu rows -> %s\n", reports.size(), out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FairAD: fairness-aware anomaly detection experiments"};
  app.require_subcommand(1);

  fs::path config;
  Overrides o;
  std::size_t rep = 0;

  auto* run = app.add_subcommand("run", "all repetitions of an experiment config");
  run->add_option("--config", config)->required()->check(CLI::ExistingFile);
  o.add_to(run);

  std::string param, values;
  std::optional<fs::path> table_out;
  auto* sw = app.add_subcommand("sweep", "one run per value of beta or lambda");
  sw->add_option("--config", config)->required()->check(CLI::ExistingFile);
  sw->add_option("--param", param)->required();
  sw->add_option("--values", values)->required();
  sw->add_option("--table", table_out, "consolidated CSV path");
  o.add_to(sw);

  fs::path model_path;
  auto* tr = app.add_subcommand("train", "train one repetition and save the model");
  tr->add_option("--config", config)->required()->check(CLI::ExistingFile);
  tr->add_option("--rep", rep, "repetition index");
  tr->add_option("--model", model_path)->required();
  o.add_to(tr);

  std::optional<fs::path> scores_out;
  auto* ev = app.add_subcommand("eval", "score a repetition's test split with a saved model");
  ev->add_option("--config", config)->required()->check(CLI::ExistingFile);
  ev->add_option("--rep", rep);
  ev->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--scores-out", scores_out, "write score,group,label CSV");
  o.add_to(ev);

  fs::path scores;
  std::string ps = "0.9,0.95";
  std::optional<fs::path> train_scores;
  auto* me = app.add_subcommand("metrics", "metric suite on a score file");
  me->add_option("--scores", scores)->required()->check(CLI::ExistingFile);
  me->add_option("--p", ps);
  me->add_option("--train-scores", train_scores, "score file whose scores set the threshold")->check(CLI::ExistingFile);

  fs::path reports_dir, out;
  auto* ex = app.add_subcommand("export", "trade-off CSV from a directory of run reports");
  ex->add_option("--reports", reports_dir)->required()->check(CLI::ExistingDirectory);
  ex->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, o);
    if (*sw) return cmd_sweep(config, o, param, values, table_out);
    if (*tr) return cmd_train(config, o, rep, model_path);
    if (*ev) return cmd_eval(config, o, rep, model_path, scores_out);
    if (*me) return cmd_metrics(scores, ps, train_scores);
    if (*ex) return cmd_export(reports_dir, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
