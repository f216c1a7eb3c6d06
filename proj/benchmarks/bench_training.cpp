#include <benchmark/benchmark.h>

#include "sid/trainer.hpp"

namespace {

sid::train::TrainState state_for(std::size_t width) {
  sid::nn::NetworkConfig c;
  c.hidden_width = width;
  sid::Rng rng(2);
  return sid::train::init_from_teacher(sid::nn::NetworkParams::random(c, rng), 3);
}

void BM_PsiStep(benchmark::State& state) {
  auto s = state_for(state.range(0));
  const sid::train::SiDConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(sid::train::psi_step(s, config));
  state.SetItemsProcessed(state.iterations() * config.batch_size);
}
BENCHMARK(BM_PsiStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ThetaStep(benchmark::State& state) {
  auto s = state_for(state.range(0));
  const sid::train::SiDConfig config;
  sid::train::psi_step(s, config);
  for (auto _ : state) benchmark::DoNotOptimize(sid::train::theta_step(s, config));
  state.SetItemsProcessed(state.iterations() * config.batch_size);
}
BENCHMARK(BM_ThetaStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
