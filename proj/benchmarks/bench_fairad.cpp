#include <benchmark/benchmark.h>

#include <vector>

#include "fairad/metrics.hpp"
#include "fairad/mlp.hpp"
#include "fairad/rng.hpp"
#include "fairad/sinkhorn.hpp"
#include "fairad/target.hpp"
#include "fairad/trainer.hpp"

using namespace fairad;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

static void BM_SinkhornDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = gaussian(n, 8, 1);
  const Matrix z = sample_target(make_target(8, 2), n);
  ot::SinkhornConfig cfg;
  for (auto _ : state) {
    auto r = ot::sinkhorn_distance(x, z, cfg);
    benchmark::DoNotOptimize(r.value);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SinkhornDistance)->RangeMultiplier(2)->Range(32, 512)->Complexity();

static void BM_Sinkhorn1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> a(n), b(n);
  for (auto& v : a) v = std::abs(rng.normal());
  for (auto& v : b) v = std::abs(rng.normal()) + 0.5;
  ot::SinkhornConfig cfg;
  for (auto _ : state) {
    auto r = ot::sinkhorn_distance_1d(a, b, cfg);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_Sinkhorn1d)->Arg(64)->Arg(256);

static void BM_MlpForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::vector<std::size_t> widths{100, 64, 32, 8};
  const auto p = nn::make_mlp(widths, 4);
  const Matrix x = gaussian(batch, 100, 5);
  const Matrix up = gaussian(batch, 8, 6);
  for (auto _ : state) {
    auto fw = nn::mlp_forward(p, x);
    auto bw = nn::mlp_backward(p, fw.cache, up);
    benchmark::DoNotOptimize(bw.input_grads.data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(256);

static void BM_TrainEpoch(benchmark::State& state) {
  const Matrix x = gaussian(2000, 12, 7);
  std::vector<int> g(2000, 0);
  for (std::size_t i = 1000; i < 2000; ++i) g[i] = 1;
  model::TrainConfig cfg;
  cfg.epochs = 1;
  const auto variant = state.range(0) == 0 ? model::Variant::Im : model::Variant::Ex;
  for (auto _ : state) {
    auto m = model::train(variant, x, g, cfg);
    benchmark::DoNotOptimize(m.history.back().total);
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Adpd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(8);
  std::vector<double> s(n);
  std::vector<int> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.normal();
    g[i] = static_cast<int>(i % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::adpd(s, g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Adpd)->RangeMultiplier(4)->Range(1 << 8, 1 << 14)->Complexity();

BENCHMARK_MAIN();
