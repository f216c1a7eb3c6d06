#include "sid/experiment.hpp"

#include <memory>

#include "sid/metrics.hpp"

namespace sid::exp {

namespace {

// Forward passes on large sample sets run in bounded chunks.
constexpr std::size_t kChunk = 4096;

}  // namespace

train::DataSampler make_sampler(const data::DatasetSpec& spec) {
  return [spec](std::size_t n, Rng& rng) { return data::sample_dataset(spec, n, rng); };
}

double distribution_metric(const Tensor& a, const Tensor& b) {
  if (a.cols() == 1) return eval::wasserstein_1d(a.data(), b.data());
  return eval::gaussian_frechet(a, b);
}

train::EvalHook make_metric_hook(const data::DatasetSpec& spec, std::size_t samples,
                                 double sigma_init, std::uint64_t seed) {
  Rng rng(seed, 0x5eed);
  auto held = std::make_shared<const Tensor>(data::sample_dataset(spec, samples, rng));
  auto z = std::make_shared<const Tensor>(rng.normal(samples, spec.dim()));
  return [held, z, sigma_init](const nn::NetworkParams& theta_ema, std::uint64_t) {
    std::vector<Tensor> parts;
    for (std::size_t first = 0; first < z->rows(); first += kChunk) {
      const std::size_t count = std::min(kChunk, z->rows() - first);
      parts.push_back(nn::generate(theta_ema, z->slice_rows(first, count), sigma_init));
    }
    return distribution_metric(vstack(parts), *held);
  };
}

Tensor teacher_samples(const nn::NetworkParams& phi, const diffusion::NoiseSchedule& schedule,
                       int steps, std::size_t n, Rng& rng) {
  const diffusion::DenoiseFn denoise = [&](const Tensor& x, double sigma) {
    return nn::denoise(phi, x, sigma);
  };
  std::vector<Tensor> parts;
  for (std::size_t first = 0; first < n; first += kChunk) {
    const std::size_t count = std::min(kChunk, n - first);
    parts.push_back(diffusion::heun_sample(denoise, schedule, steps, count, phi.config().data_dim, rng));
  }
  return vstack(parts);
}

Tensor generator_samples(const nn::NetworkParams& theta, double sigma_init, std::size_t n, Rng& rng) {
  std::vector<Tensor> parts;
  for (std::size_t first = 0; first < n; first += kChunk) {
    const std::size_t count = std::min(kChunk, n - first);
    parts.push_back(nn::generate(theta, rng.normal(count, theta.config().data_dim), sigma_init));
  }
  return vstack(parts);
}

}  // namespace sid::exp
