#pragma once

// Glue shared by the command-line tool and the end-to-end checks.

#include <cstddef>
#include <cstdint>

#include "sid/datasets.hpp"
#include "sid/diffusion.hpp"
#include "sid/network.hpp"
#include "sid/rng.hpp"
#include "sid/tensor.hpp"
#include "sid/trainer.hpp"

namespace sid::exp {

train::DataSampler make_sampler(const data::DatasetSpec& spec);

/// gaussian_frechet for two or more dimensions, wasserstein_1d in one.
double distribution_metric(const Tensor& a, const Tensor& b);

/// Scores theta_ema against `samples` held-out data draws with a fixed set of
/// latent draws, so every call sees the same noise.
train::EvalHook make_metric_hook(const data::DatasetSpec& spec, std::size_t samples,
                                 double sigma_init, std::uint64_t seed);

/// n samples from the multi-step deterministic sampler driven by phi.
Tensor teacher_samples(const nn::NetworkParams& phi, const diffusion::NoiseSchedule& schedule,
                       int steps, std::size_t n, Rng& rng);

/// n one-step samples G_theta(sigma_init z).
Tensor generator_samples(const nn::NetworkParams& theta, double sigma_init, std::size_t n, Rng& rng);

}  // namespace sid::exp
