#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "fairad/error.hpp"
#include "fairad/experiment.hpp"
#include "fairad/metrics.hpp"
#include "fairad/model_io.hpp"
#include "oracles.hpp"

using namespace fairad;
using namespace fairad::harness;

namespace {

ExperimentConfig small_config(std::size_t reps) {
  ExperimentConfig cfg;
  cfg.name = "unit";
  cfg.dataset.name = "synthetic";
  data::SyntheticSpec spec;
  spec.normal_per_group = 120;
  spec.abnormal_per_group = 40;
  spec.seed = 5;
  cfg.dataset.synthetic = spec;
  cfg.split.train_normal = {80, 80};
  cfg.split.test_normal = {30, 30};
  cfg.split.test_abnormal = {30, 30};
  cfg.train.epochs = 3;
  cfg.train.batch_size = 64;
  cfg.train.target = make_target(2, 0);
  cfg.repetitions = reps;
  cfg.base_seed = 11;
  return cfg;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("one repetition: aggregates equal the entry") {
  auto cfg = small_config(1);
  auto r = run_experiment(cfg);
  REQUIRE(r.ok());
  REQUIRE(r.repetitions.size() == 1);
  CHECK(r.seeds == std::vector<std::uint64_t>{11});
  const auto& rep = r.repetitions[0];
  REQUIRE(rep.reports.size() == 2);
  CHECK(rep.history.epochs == 3);
  CHECK(r.find("auc")->mean == *rep.reports[0].auc);
  CHECK(r.find("auc")->std == 0.0);
  CHECK(r.find("adpd_all")->mean == rep.reports[0].adpd_all);
  CHECK(r.find("f1@0.95")->mean == *rep.reports[1].f1);
  CHECK(r.find("eo@0.9")->mean == *rep.reports[0].eo);
  CHECK(r.config_hash == cfg.hash());
}

TEST_CASE("aggregates recompute from repetition entries") {
  auto cfg = small_config(3);
  auto r = run_experiment(cfg);
  REQUIRE(r.ok());
  CHECK(r.seeds == std::vector<std::uint64_t>{11, 12, 13});
  std::vector<double> aucs, adpds;
  for (const auto& rep : r.repetitions) {
    aucs.push_back(*rep.reports[0].auc);
    adpds.push_back(rep.reports[0].adpd_all);
  }
  CHECK(r.find("auc")->mean == mean_of(aucs));
  CHECK(std::abs(r.find("auc")->std - sample_std(aucs)) <= 1e-15);
  CHECK(r.find("adpd_all")->mean == mean_of(adpds));
  CHECK(std::abs(r.find("adpd_all")->std - sample_std(adpds)) <= 1e-15);
  CHECK(r.find("auc")->count == 3);
}

TEST_CASE("identical configs give identical reports") {
  auto cfg = small_config(2);
  const auto a = run_experiment(cfg).to_json_text();
  const auto b = run_experiment(cfg).to_json_text();
  CHECK(a == b);
  auto back = RunReport::from_json_text(a);
  CHECK(back.to_json_text() == a);
}

TEST_CASE("config json round trip and hash") {
  auto cfg = small_config(2);
  auto back = ExperimentConfig::from_json_text(cfg.to_json_text());
  CHECK(back.to_json_text() == cfg.to_json_text());
  CHECK(back.hash() == cfg.hash());
  auto other = cfg;
  other.train.beta = 2.0;
  CHECK(other.hash() != cfg.hash());
  auto moved = cfg;
  moved.output = "elsewhere.json";
  CHECK(moved.hash() == cfg.hash());
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{"), ParseError);
  auto bad = cfg;
  bad.p_values = {1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stage errors become failure records") {
  auto cfg = small_config(1);
  cfg.split.train_normal = {500, 500};
  auto r = run_experiment(cfg);
  CHECK_FALSE(r.ok());
  REQUIRE(r.repetitions.size() == 1);
  REQUIRE(r.repetitions[0].failure);
  CHECK(r.repetitions[0].failure->find("infeasible") != std::string::npos);
}

TEST_CASE("sweep: singleton equals run, lambda on Im rejected, table rows") {
  auto cfg = small_config(1);
  auto one = sweep(cfg, SweepParam::Beta, {cfg.train.beta});
  REQUIRE(one.size() == 1);
  CHECK(one[0].to_json_text() == run_experiment(cfg).to_json_text());
  CHECK_THROWS_AS(sweep(cfg, SweepParam::Lambda, {0, 1}), ConfigError);
  CHECK_THROWS_AS(sweep_param_from_string("gamma"), ConfigError);

  cfg.train.epochs = 1;
  const std::vector<double> betas{0.001, 0.01, 0.1, 1, 10, 100, 1000};
  auto reps = sweep(cfg, SweepParam::Beta, betas);
  REQUIRE(reps.size() == 7);
  const auto table = sweep_table_csv(SweepParam::Beta, betas, reps);
  std::size_t lines = 0;
  for (char c : table) lines += c == '\n';
  CHECK(lines == 8);
  CHECK(table.rfind("beta,auc_mean,auc_std,adpd_all_mean,adpd_all_std\n", 0) == 0);
}

TEST_CASE("eval_scores on a hand file") {
  const std::string csv =
      "score,group,label\n"
      "1,0,0\n2,0,1\n3,1,0\n4,1,1\n"
      "0.5,0,0\n0.5,1,0\n5,0,1\n6,1,1\n";
  auto t = parse_score_csv(csv);
  CHECK(t.scores.size() == 8);
  const std::vector<double> train{0.5, 1, 2, 3};
  auto reps = eval_scores(t, {0.5}, train);
  REQUIRE(reps.size() == 1);
  const auto& r = reps[0];
  CHECK(r.threshold == 1.0);
  CHECK(*r.auc == oracle::auc(t.scores, *t.labels));
  CHECK(std::abs(r.adpd_all - oracle::adpd(t.scores, t.group_ids, 2)) <= 1e-12);
  // Abnormal scores {2,5} vs {4,6}, all above 1.
  CHECK(*r.eo == 0.0);
  // Predictions: 2,3,4,5,6 positive; TP 4, FP 1, FN 0.
  CHECK(std::abs(*r.f1 - 8.0 / 9.0) <= 1e-12);
}

TEST_CASE("eval_scores: equal groups and missing labels") {
  auto t = parse_score_csv("score,group\n1,0\n2,0\n1,1\n2,1\n");
  CHECK_FALSE(t.labels);
  auto r = eval_scores(t, {0.9});
  CHECK(r[0].adpd_all == 0.0);
  CHECK_FALSE(r[0].auc);
  CHECK_FALSE(r[0].f1);
  CHECK_FALSE(r[0].eo);
  CHECK(r[0].fairness_ratio_all.value == 0.0);
  CHECK(r[0].fairness_ratio_all.undefined);
  CHECK_FALSE(r[0].notices.empty());
}

TEST_CASE("score file errors name the line") {
  auto msg = [](const std::string& text) {
    try {
      parse_score_csv(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg("score,group\n1,0\nabc,1\n").find("line 3") != std::string::npos);
  CHECK(msg("score,group,label\n1,0,2\n").find("line 2") != std::string::npos);
  CHECK(msg("score\n1\n").find("line 1") != std::string::npos);
  CHECK(msg("score,group\n1\n").find("line 2") != std::string::npos);
}

TEST_CASE("tradeoff export round trips") {
  auto r = run_experiment(small_config(1));
  auto r2 = r;
  r2.method = "Ex-FairAD";
  r2.aggregates.erase(std::remove_if(r2.aggregates.begin(), r2.aggregates.end(),
                                     [](const Aggregate& a) { return a.metric == "adpd_abnormal"; }),
                      r2.aggregates.end());
  const auto csv = export_tradeoff({r, r2});
  auto rows = parse_tradeoff_csv(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == tradeoff_rows({r})[0]);
  CHECK(rows[0].auc == r.find("auc")->mean);
  CHECK(rows[1].method == "Ex-FairAD");
  CHECK(std::isnan(rows[1].adpd_abnormal));
  CHECK(csv.rfind("method,dataset,auc,adpd_all,adpd_normal,adpd_abnormal\n", 0) == 0);
  CHECK(parse_tradeoff_csv(export_tradeoff({r})).size() == 1);
}

TEST_CASE("model file round trip") {
  model::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.target = make_target(3, 4);
  Matrix x = oracle::random_matrix(60, 5, 2);
  std::vector<int> g(60, 0);
  for (int i = 30; i < 60; ++i) g[i] = 1;
  auto m = model::train(model::Variant::Ex, x, g, cfg);
  const auto text = model::model_to_json(m, 42);
  std::uint64_t hash = 0;
  auto back = model::model_from_json(text, &hash);
  CHECK(hash == 42);
  CHECK(back.variant == m.variant);
  CHECK(back.encoder == m.encoder);
  CHECK(back.decoder == m.decoder);
  CHECK(back.history == m.history);
  CHECK(back.target.dim == 3);
  CHECK(model::score(back, x) == model::score(m, x));
  CHECK(model::model_to_json(back, 42) == text);

  // Training continues identically from the loaded state.
  model::continue_training(m, x, g, cfg);
  model::continue_training(back, x, g, cfg);
  CHECK(back.encoder == m.encoder);

  CHECK_THROWS_AS(model::model_from_json("{}"), ParseError);
  auto broken = text;
  const auto at = broken.find('1', broken.find("\"format_version\""));
  broken[at] = '9';
  CHECK_THROWS_AS(model::model_from_json(broken), ParseError);
}
