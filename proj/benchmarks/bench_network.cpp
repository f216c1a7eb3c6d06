#include <benchmark/benchmark.h>

#include "sid/network.hpp"

namespace {

sid::nn::NetworkConfig net(std::size_t width) {
  sid::nn::NetworkConfig c;
  c.hidden_width = width;
  return c;
}

void BM_DenoiseForward(benchmark::State& state) {
  sid::Rng rng(1);
  const auto params = sid::nn::NetworkParams::random(net(state.range(0)), rng);
  const sid::Tensor x = rng.normal(state.range(1), 2);
  for (auto _ : state) benchmark::DoNotOptimize(sid::nn::denoise(params, x, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_DenoiseForward)->Args({64, 256})->Args({128, 256})->Args({128, 4096});

void BM_DenoiseBackward(benchmark::State& state) {
  sid::Rng rng(1);
  const auto params = sid::nn::NetworkParams::random(net(state.range(0)), rng);
  const sid::Tensor x = rng.normal(256, 2);
  const std::vector<double> sigma(256, 1.0);
  for (auto _ : state) {
    sid::ad::Graph g;
    const auto out = sid::nn::MlpDenoiser(params).attach(g, g.constant(x), sigma,
                                                         sid::nn::Role::Trainable);
    benchmark::DoNotOptimize(g.backward(g.squared_norm(out.output)));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_DenoiseBackward)->Arg(64)->Arg(128);

}  // namespace
