#include <benchmark/benchmark.h>

#include "sid/metrics.hpp"

namespace {

void BM_GaussianFrechet(benchmark::State& state) {
  sid::Rng rng(4);
  const sid::Tensor a = rng.normal(state.range(0), 2);
  const sid::Tensor b = rng.normal(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(sid::eval::gaussian_frechet(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GaussianFrechet)->Arg(10'000)->Arg(50'000);

void BM_Wasserstein1d(benchmark::State& state) {
  sid::Rng rng(5);
  std::vector<double> a(state.range(0)), b(state.range(0));
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(sid::eval::wasserstein_1d(a, b));
}
BENCHMARK(BM_Wasserstein1d)->Arg(10'000);

}  // namespace
BENCHMARK_MAIN();
