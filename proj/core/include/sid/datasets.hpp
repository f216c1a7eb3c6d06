#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::data {

/// Isotropic Gaussian mixture sum_k w_k N(mu_k, s_k^2 I). Diffusing it with
/// noise sigma gives another mixture, so its score and posterior mean are exact.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<std::vector<double>> means,
                  std::vector<double> stds);

  std::size_t dim() const { return means_.front().size(); }
  std::size_t components() const { return weights_.size(); }

  std::vector<double> sample_point(Rng& rng) const;
  Tensor sample(std::size_t n, Rng& rng) const;

  /// grad ln p_sigma(x) of the mixture convolved with N(0, sigma^2 I).
  std::vector<double> diffused_score(std::span<const double> x, double sigma) const;
  /// E[x0 | x_t = x] under Gaussian corruption with noise sigma.
  std::vector<double> posterior_mean(std::span<const double> x, double sigma) const;

 private:
  // Posterior component responsibilities at x for noise sigma.
  std::vector<double> responsibilities(std::span<const double> x, double sigma) const;

  std::vector<double> weights_;
  std::vector<std::vector<double>> means_;
  std::vector<double> stds_;
};

/// Eight Gaussians of std 0.05 evenly spaced on the unit circle.
GaussianMixture ring8();

enum class DatasetKind { Gaussian, Ring8, Moons, Checkerboard };

DatasetKind parse_dataset(const std::string& name);
std::string dataset_name(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Ring8;
  /// Gaussian dataset only: N(mean, I) with dim = mean.size().
  std::vector<double> gaussian_mean{0.0};

  std::size_t dim() const;
};

/// i.i.d. draws, one per row.
///
/// moons: two interleaved half circles, upper (cos a, sin a) and lower
///   (1 - cos a, 0.5 - sin a) for a ~ U[0, pi], shifted by (-0.5, -0.25),
///   plus N(0, 0.05^2) noise.
/// checkerboard: x ~ U[-2, 2), y ~ U[0, 1) - 2 b + (floor(x) mod 2) with
///   b ~ Bernoulli(1/2), giving eight unit squares in [-2, 2)^2.
Tensor sample_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng);

}  // namespace sid::data
