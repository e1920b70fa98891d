// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 1 4 skew   a subset, by id
//
// Real-data criteria read configs from FAIRAD_CONFIG_DIR (defaults to the
// source tree) and CSVs from FAIRAD_DATA_DIR.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "fairad/dataset.hpp"
#include "fairad/error.hpp"
#include "fairad/experiment.hpp"
#include "fairad/finite_diff.hpp"
#include "fairad/metrics.hpp"
#include "fairad/objectives.hpp"
#include "fairad/sinkhorn.hpp"
#include "fairad/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fairad;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path config_dir() {
  if (const char* d = std::getenv("FAIRAD_CONFIG_DIR"); d && *d) return d;
  return fs::path(FAIRAD_SOURCE_DIR) / "configs";
}

harness::ExperimentConfig load_config(const std::string& name) {
  return harness::ExperimentConfig::load(config_dir() / name);
}

// Mean of an aggregate, or NaN when missing.
double agg(const harness::RunReport& r, const std::string& metric) {
  const auto* a = r.find(metric);
  return a ? a->mean : std::nan("");
}

std::string failures(const harness::RunReport& r) {
  for (const auto& rep : r.repetitions) {
    if (rep.failure) return "repetition " + std::to_string(rep.index) + ": " + *rep.failure;
  }
  return "";
}

// ---------------------------------------------------------------- 1 and 2

struct TinyInstance {
  Matrix c;
  std::vector<double> a, b;
  double alpha = 0.1;
};

std::vector<TinyInstance> tiny_instances() {
  Rng rng(20240601);
  const double alphas[] = {0.05, 0.1, 1.0};
  std::vector<TinyInstance> out;
  for (int i = 0; i < 50; ++i) {
    TinyInstance t;
    const std::size_t n1 = 1 + rng.below(3), n2 = 1 + rng.below(3);
    t.alpha = alphas[i % 3];
    t.c = Matrix(n1, n2);
    for (double& v : t.c.data()) v = 2.0 * rng.uniform();
    t.a = oracle::random_simplex(n1, rng);
    t.b = oracle::random_simplex(n2, rng);
    out.push_back(std::move(t));
  }
  return out;
}

ot::SinkhornConfig tight(double alpha) {
  ot::SinkhornConfig cfg;
  cfg.alpha = alpha;
  cfg.tol = 1e-12;
  cfg.max_iter = 100000;
  return cfg;
}

Outcome crit_sinkhorn_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int ok = 0, unconverged = 0;
  for (const auto& t : tiny_instances()) {
    const auto tp = ot::sinkhorn_plan(t.c, t.a, t.b, tight(t.alpha));
    if (!tp.converged) ++unconverged;
    const double err = std::abs(tp.objective - oracle::grid_min_entropic(t.c, t.a, t.b, t.alpha));
    worst = std::max(worst, err);
    ok += err <= 1e-3 ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  return {ok == 50 && unconverged == 0 && secs < 10.0,
          std::to_string(ok) + "/50 within 1e-3, max |diff| " + fmt("%.2e", worst) + ", " +
              std::to_string(unconverged) + " unconverged, " + fmt("%.2fs", secs) + " (limit 10s)"};
}

double max_marginal_residual(const Matrix& p, const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < p.cols(); ++j) s += p(i, j);
    r = std::max(r, std::abs(s - a[i]));
  }
  for (std::size_t j = 0; j < p.cols(); ++j) {
    double s = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) s += p(i, j);
    r = std::max(r, std::abs(s - b[j]));
  }
  return r;
}

Outcome crit_marginals() {
  std::size_t converged = 0, total = 0, bad = 0;
  double worst = 0.0;
  auto check = [&](const Matrix& c, const std::vector<double>& a, const std::vector<double>& b,
                   const ot::SinkhornConfig& cfg) {
    ++total;
    const auto tp = ot::sinkhorn_plan(c, a, b, cfg);
    if (!tp.converged) return;
    ++converged;
    const double r = max_marginal_residual(tp.plan, a, b);
    worst = std::max(worst, r);
    bad += r > 1e-6 ? 1 : 0;
  };
  for (const auto& t : tiny_instances()) check(t.c, t.a, t.b, tight(t.alpha));
  // Default settings on point clouds of training-batch size.
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n1 = 2 + rng.below(150), n2 = 2 + rng.below(150);
    const auto x = oracle::random_matrix(n1, 1 + rng.below(8), 1000 + i);
    auto y = oracle::random_matrix(n2, x.cols(), 2000 + i);
    for (double& v : y.data()) v *= 0.5;
    const auto c = ot::cost_matrix(x, y);
    const auto a = i % 2 ? oracle::random_simplex(n1, rng) : ot::uniform_weights(n1);
    const auto b = i % 2 ? oracle::random_simplex(n2, rng) : ot::uniform_weights(n2);
    check(c, a, b, ot::SinkhornConfig{});
  }
  return {bad == 0 && converged > 0,
          std::to_string(converged) + "/" + std::to_string(total) + " converged, max residual " +
              fmt("%.2e", worst) + " (limit 1e-6)"};
}

// ---------------------------------------------------------------- 3

std::vector<double> joint(const nn::MlpParams& a, const nn::MlpParams& b) {
  auto v = nn::flatten(a);
  auto w = nn::flatten(b);
  v.insert(v.end(), w.begin(), w.end());
  return v;
}

void split_joint(std::span<const double> flat, nn::MlpParams& a, nn::MlpParams& b) {
  const std::size_t na = a.parameter_count();
  nn::assign_flat(a, flat.subspan(0, na));
  nn::assign_flat(b, flat.subspan(na));
}

Outcome crit_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  model::DivergenceConfig div;
  div.sinkhorn.tol = 1e-11;
  div.sinkhorn.max_iter = 100000;
  std::size_t agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto enc = nn::make_mlp(std::vector<std::size_t>{3, 8, 2}, 10 + seed);
    auto dec = nn::make_mlp(std::vector<std::size_t>{2, 8, 3}, 20 + seed);
    Matrix g0 = oracle::random_matrix(4, 3, 30 + seed), g1 = oracle::random_matrix(4, 3, 40 + seed);
    for (std::size_t i = 0; i < 4; ++i) g1(i, 0) += 2.0;
    const std::vector<Matrix> groups{g0, g1};
    const std::vector<Matrix> targets{oracle::random_matrix(4, 2, 50 + seed), oracle::random_matrix(4, 2, 60 + seed)};
    const Matrix x = vstack(groups);
    const std::vector<int> gid{0, 0, 0, 0, 1, 1, 1, 1};
    const Matrix z = vstack(targets);

    auto tally = [&](const model::LossResult& r, const std::function<double(const nn::MlpParams&, const nn::MlpParams&)>& f) {
      auto e2 = enc, d2 = dec;
      auto fd = nn::finite_diff_grad(
          [&](std::span<const double> th) {
            split_joint(th, e2, d2);
            return f(e2, d2);
          },
          joint(enc, dec), 1e-5);
      const auto an = joint(r.encoder_grad, r.decoder_grad);
      for (std::size_t i = 0; i < an.size(); ++i) {
        ++total;
        agree += oracle::rel_err(an[i], fd[i], 1e-6) <= 1e-3 ? 1 : 0;
      }
    };
    auto im = [&](const nn::MlpParams& e, const nn::MlpParams& d) {
      return model::im_fairad_loss(groups, targets, e, d, 0.8, div);
    };
    auto ex = [&](const nn::MlpParams& e, const nn::MlpParams& d) {
      return model::ex_fairad_loss(x, gid, z, e, d, 0.8, 1.0, div);
    };
    tally(im(enc, dec), [&](const nn::MlpParams& e, const nn::MlpParams& d) { return im(e, d).loss; });
    tally(ex(enc, dec), [&](const nn::MlpParams& e, const nn::MlpParams& d) { return ex(e, d).loss; });
  }
  const double share = static_cast<double>(agree) / static_cast<double>(total);
  const double secs = seconds_since(t0);
  return {share >= 0.99 && secs < 30.0,
          fmt("%.4f", share) + " of " + std::to_string(total) + " coordinates within rel 1e-3 (need 0.99), " +
              fmt("%.2fs", secs) + " (limit 30s)"};
}

// ---------------------------------------------------------------- 4

Outcome crit_transport_implies_parity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> adpds;
  std::size_t max_epochs = 0;
  std::string note;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    data::SyntheticSpec spec;
    spec.dim = 4;
    spec.normal_per_group = 1200;
    spec.abnormal_per_group = 0;
    spec.group_shift = 2.0;
    spec.seed = 100 + seed;
    const auto full = data::make_synthetic(spec);
    const auto parts = data::split(full, data::SplitPlan::per_group(std::vector<std::size_t>{200, 200},
                                                                    std::vector<std::size_t>{1000, 1000},
                                                                    std::vector<std::size_t>{0, 0}, seed));
    const auto [train, held] = data::preprocess(parts.train, parts.test);

    model::TrainConfig cfg;
    cfg.seed = seed;
    cfg.target = make_target(1, seed);
    cfg.batch_size = 400;
    cfg.beta = 0.1;
    cfg.learning_rate = 1e-2;
    cfg.divergence.sinkhorn.alpha = 0.01;
    cfg.epochs = 0;
    auto m = model::train(model::Variant::Im, train.features, train.sensitive, cfg);
    cfg.epochs = 10;
    bool reached = false;
    while (m.history.size() < 3000) {
      model::continue_training(m, train.features, train.sensitive, cfg);
      const auto& c = m.history.back().group_transport_cost;
      if (std::all_of(c.begin(), c.end(), [](double v) { return v < 0.05; })) {
        reached = true;
        break;
      }
    }
    max_epochs = std::max(max_epochs, m.history.size());
    if (!reached) note = ", seed " + std::to_string(seed) + " never reached cost < 0.05";
    const auto scores = model::score(m, held.features);
    adpds.push_back(reached ? metrics::adpd(scores, held.sensitive) : 1.0);
  }
  const double worst = *std::max_element(adpds.begin(), adpds.end());
  double mean = 0;
  for (double v : adpds) mean += v / 5.0;
  const double secs = seconds_since(t0);
  return {worst <= 0.05 && secs < 300.0,
          "held-out ADPD max " + fmt("%.4f", worst) + " mean " + fmt("%.4f", mean) + " over 5 seeds (limit 0.05), " +
              "up to " + std::to_string(max_epochs) + " epochs" + note + ", " + fmt("%.1fs", secs) + " (limit 300s)"};
}

// ---------------------------------------------------------------- 5, 6, 10, skew

struct RealRun {
  harness::RunReport report;
  double seconds = 0.0;
};

RealRun run_config(const std::string& name) {
  const auto cfg = load_config(name);
  const auto t0 = std::chrono::steady_clock::now();
  RealRun r{harness::run_experiment(cfg), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

std::optional<RealRun> compas_balanced;

const RealRun& compas_balanced_run() {
  if (!compas_balanced) compas_balanced = run_config("compas_balanced_im.json");
  return *compas_balanced;
}

Outcome reproduction(const RealRun& r, double min_auc, double max_adpd, double limit_s) {
  if (!r.report.ok()) return {false, failures(r.report)};
  const double auc = agg(r.report, "auc"), adpd = agg(r.report, "adpd_all");
  return {auc >= min_auc && adpd <= max_adpd && r.seconds < limit_s,
          "AUC " + fmt("%.4f", auc) + " (need >= " + fmt("%.2f", min_auc) + "), ADPD(all) " + fmt("%.4f", adpd) +
              " (need <= " + fmt("%.2f", max_adpd) + "), " + std::to_string(r.report.repetitions.size()) +
              " seeds, " + fmt("%.0fs", r.seconds) + " (limit " + fmt("%.0fs", limit_s) + ")"};
}

Outcome crit_compas() { return reproduction(compas_balanced_run(), 0.58, 0.10, 600.0); }

Outcome crit_adult() { return reproduction(run_config("adult_balanced_im.json"), 0.65, 0.06, 900.0); }

Outcome crit_skewed() {
  const auto r = run_config("compas_skewed_im.json");
  if (!r.report.ok()) return {false, failures(r.report)};
  const double adpd = agg(r.report, "adpd_all");
  return {adpd <= 0.10, "ADPD(all) " + fmt("%.4f", adpd) + " (need <= 0.10), AUC " + fmt("%.4f", agg(r.report, "auc")) +
                            ", " + fmt("%.0fs", r.seconds)};
}

Outcome crit_determinism() {
  const auto& first = compas_balanced_run();
  const auto second = run_config("compas_balanced_im.json");
  if (!first.report.ok() || !second.report.ok()) return {false, "run failed: " + failures(second.report)};
  std::size_t compared = 0, differ = 0;
  for (std::size_t i = 0; i < first.report.repetitions.size(); ++i) {
    const auto& a = first.report.repetitions[i].reports;
    const auto& b = second.report.repetitions[i].reports;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double va[] = {*a[k].auc, a[k].adpd_all, *a[k].adpd_normal, *a[k].adpd_abnormal, a[k].threshold, *a[k].f1};
      const double vb[] = {*b[k].auc, b[k].adpd_all, *b[k].adpd_normal, *b[k].adpd_abnormal, b[k].threshold, *b[k].f1};
      for (std::size_t q = 0; q < 6; ++q) {
        ++compared;
        differ += va[q] == vb[q] ? 0 : 1;
      }
    }
  }
  const bool same_text = first.report.to_json_text() == second.report.to_json_text();
  return {differ == 0 && same_text,
          std::to_string(compared) + " metric values compared, " + std::to_string(differ) + " differ, report JSON " +
              (same_text ? "identical" : "differs")};
}

// ---------------------------------------------------------------- 7

std::pair<double, double> lambda_pair(harness::ExperimentConfig cfg) {
  cfg.variant = model::Variant::Ex;
  const auto reports = harness::sweep(cfg, harness::SweepParam::Lambda, {0.0, 1.0});
  for (const auto& r : reports) {
    if (!r.ok()) throw Error(failures(r));
  }
  return {agg(reports[0], "adpd_all"), agg(reports[1], "adpd_all")};
}

Outcome crit_ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  auto syn = load_config("synthetic_im.json");
  const auto [s0, s1] = lambda_pair(syn);
  std::string detail = "synthetic ADPD lambda=0 " + fmt("%.4f", s0) + " vs lambda=1 " + fmt("%.4f", s1);
  bool pass = s1 < s0;
  try {
    const auto [c0, c1] = lambda_pair(load_config("compas_balanced_ex.json"));
    detail += "; COMPAS " + fmt("%.4f", c0) + " vs " + fmt("%.4f", c1);
    pass = pass && c1 < c0;
  } catch (const Error& e) {
    detail += "; COMPAS failed: " + std::string(e.what());
    pass = false;
  }
  return {pass, detail + " (5 seeds each), " + fmt("%.0fs", seconds_since(t0))};
}

// ---------------------------------------------------------------- 8 and 9

Outcome crit_metric_oracles() {
  int checked = 0, wrong = 0;
  auto expect = [&](double got, double want) {
    ++checked;
    wrong += std::abs(got - want) <= 1e-12 ? 0 : 1;
  };
  using V = std::vector<double>;
  using I = std::vector<int>;

  // AUC: every fixture against pair enumeration and its stated value.
  const std::vector<std::pair<V, I>> auc_cases{{{1, 2, 3, 4}, {0, 0, 1, 1}}, {{2, 2, 2, 2}, {0, 1, 0, 1}},
                                               {{1, 2, 3, 4}, {0, 1, 0, 1}}};
  const double auc_stated[] = {1.0, 0.5, 0.75};
  for (std::size_t i = 0; i < auc_cases.size(); ++i) {
    expect(metrics::auc(auc_cases[i].first, auc_cases[i].second), oracle::auc(auc_cases[i].first, auc_cases[i].second));
    expect(metrics::auc(auc_cases[i].first, auc_cases[i].second), auc_stated[i]);
  }

  // F1 against confusion counts.
  auto f1_oracle = [](const V& s, const I& y, double t) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      tp += s[i] > t && y[i] == 1;
      fp += s[i] > t && y[i] == 0;
      fn += !(s[i] > t) && y[i] == 1;
    }
    return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  };
  const std::vector<std::pair<V, I>> f1_cases{{{0, 0, 5, 5}, {0, 0, 1, 1}}, {{0, 0, 0, 0}, {0, 0, 1, 1}},
                                              {{0, 5, 5, 5, 0}, {0, 0, 1, 1, 1}}};
  const double f1_stated[] = {1.0, 0.0, 2.0 / 3.0};
  for (std::size_t i = 0; i < f1_cases.size(); ++i) {
    const double got = metrics::f1_at_threshold(f1_cases[i].first, f1_cases[i].second, 1.0);
    expect(got, f1_oracle(f1_cases[i].first, f1_cases[i].second, 1.0));
    expect(got, f1_stated[i]);
  }

  // ADPD against the definition.
  const std::vector<std::pair<V, I>> adpd_cases{{{1, 2, 3, 1, 2, 3}, {0, 0, 0, 1, 1, 1}}, {{1, 2, 3, 4}, {0, 0, 1, 1}},
                                                {{0.3, 1.7, 2.2, 0.3, 1.7, 2.2}, {0, 0, 0, 1, 1, 1}}};
  const double adpd_stated[] = {0.0, 0.5, 0.0};
  for (std::size_t i = 0; i < adpd_cases.size(); ++i) {
    const double got = metrics::adpd(adpd_cases[i].first, adpd_cases[i].second);
    expect(got, oracle::adpd(adpd_cases[i].first, adpd_cases[i].second, 2));
    expect(got, adpd_stated[i]);
  }

  // Fairness ratio: equal rates, 0.2 vs 0.4.
  expect(metrics::fairness_ratio(V{0, 2, 0, 2}, I{0, 0, 1, 1}, 1.0).value, 1.0);
  expect(metrics::fairness_ratio(V{2, 0, 0, 0, 0, 2, 2, 0, 0, 0}, I{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 1.0).value,
         std::min(0.2 / 0.4, 0.4 / 0.2));

  // EO: identical, 1.0 vs 0.5, and a 3 + 3 hand count.
  const I y4{1, 1, 1, 1, 0, 0};
  expect(metrics::eo(V{3, 4, 3, 4, 9, 0}, I{0, 0, 1, 1, 0, 1}, y4, 2.0), 0.0);
  expect(metrics::eo(V{3, 4, 1, 4, 0, 0}, I{0, 0, 1, 1, 0, 1}, y4, 2.0), 0.5);
  expect(metrics::eo(V{1, 3, 4, 2, 2.5, 5, 10, 10}, I{0, 0, 0, 1, 1, 1, 0, 1}, I{1, 1, 1, 1, 1, 1, 0, 0}, 2.5),
         std::abs(2.0 / 3.0 - 1.0 / 3.0));

  // Random tables against the brute-force oracles.
  Rng rng(99);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 10 + rng.below(40);
    V s(n);
    I g(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::floor(rng.uniform() * 6);
      g[i] = static_cast<int>(rng.below(2));
      y[i] = static_cast<int>(rng.below(2));
    }
    g[0] = 0, g[1] = 1, y[0] = 0, y[1] = 1;
    expect(metrics::auc(s, y), oracle::auc(s, y));
    expect(metrics::adpd(s, g), oracle::adpd(s, g, 2));
    expect(metrics::f1_at_threshold(s, y, 2.0), f1_oracle(s, y, 2.0));
  }
  return {wrong == 0, std::to_string(checked - wrong) + "/" + std::to_string(checked) + " values match (tol 1e-12)"};
}

Outcome crit_undefined_ratio() {
  const auto r = metrics::fairness_ratio(std::vector<double>{0, 0, 2, 2}, std::vector<int>{0, 0, 1, 1}, 1.0);
  const auto swapped = metrics::fairness_ratio(std::vector<double>{2, 2, 0, 0}, std::vector<int>{0, 0, 1, 1}, 1.0);
  const auto both = metrics::fairness_ratio(std::vector<double>{0, 0, 0, 0}, std::vector<int>{0, 0, 1, 1}, 1.0);
  const bool pass = r.value == 0.0 && r.undefined && swapped.value == 0.0 && swapped.undefined && both.value == 0.0 &&
                    both.undefined;
  return {pass, "zero-exceedance group gives value " + fmt("%g", r.value) + ", undefined=" +
                    (r.undefined ? "true" : "false") + " (both orders and all-zero case checked)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"1", "Sinkhorn objective matches brute-force minimization", crit_sinkhorn_oracle},
      {"2", "converged plans satisfy the marginals", crit_marginals},
      {"3", "loss gradients match finite differences", crit_gradients},
      {"4", "small per-group transport cost gives held-out parity", crit_transport_implies_parity},
      {"5", "COMPAS balanced, Im-FairAD", crit_compas},
      {"6", "Adult balanced, Im-FairAD", crit_adult},
      {"7", "Ex-FairAD lambda=1 lowers ADPD vs lambda=0", crit_ablation},
      {"8", "metric oracles", crit_metric_oracles},
      {"9", "fairness ratio undefined case", crit_undefined_ratio},
      {"10", "determinism of criterion 5", crit_determinism},
      {"skew", "COMPAS skewed, Im-FairAD ADPD", crit_skewed},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %-4s %s: %s\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
