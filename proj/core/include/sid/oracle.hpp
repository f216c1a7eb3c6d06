#pragma once

// Closed-form Gaussian world: data N(mu, I), generator N(theta, I), Gaussian
// corruption with a_t = 1. Everything here is exact and serves as the oracle
// for the estimators in losses.hpp and metrics.hpp.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sid/network.hpp"
#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::oracle {

struct GaussianWorld {
  std::size_t dim = 1;
  std::vector<double> mean;  ///< mu, length dim

  static GaussianWorld centered(std::size_t dim) { return {dim, std::vector<double>(dim, 0.0)}; }
  void validate() const;
};

/// One-dimensional toy of the failure-case analysis: data N(0,1), generator
/// N(theta,1), fake denoiser x/(1+s^2) + psi s^2/(1+s^2).
struct ToyState {
  double theta = 0.0;
  double psi = 0.0;
  double sigma = 1.0;
};

/// Monte-Carlo mean with its standard error, per component.
struct MCEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t n = 0;

  double value() const { return mean.at(0); }
  double error() const { return std_error.at(0); }
};

/// Streaming (Welford) mean/variance over vectors of fixed length.
class MeanAccumulator {
 public:
  explicit MeanAccumulator(std::size_t dim = 1) : mean_(dim, 0.0), m2_(dim, 0.0) {}
  void add(std::span<const double> x);
  void add(double x) { add(std::span<const double>(&x, 1)); }
  std::size_t count() const { return n_; }
  /// Requires at least two observations.
  MCEstimate result() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Posterior mean E[x0 | x_t] = mu + (x_t - mu) / (1 + sigma^2), row-wise.
Tensor analytic_denoiser(const GaussianWorld& world, const Tensor& x_t, double sigma);
/// grad ln p(x_t) = -(x_t - mu) / (1 + sigma^2), row-wise.
Tensor analytic_score(const GaussianWorld& world, const Tensor& x_t, double sigma);

/// delta_{phi,psi} = -psi / (1 + sigma^2).
double toy_delta(const ToyState& state);
/// delta_{phi,psi*(theta)} = -theta / (1 + sigma^2).
double toy_delta_exact(const ToyState& state);

struct ToyLosses {
  double l_theta;  ///< theta^2 / (1 + sigma^2)^2
  double l1_hat;   ///< psi^2 / (1 + sigma^2)^2
};
ToyLosses toy_losses(const ToyState& state);

/// Single-sample L2 estimate in closed form: psi/(1+s^2)^2 (x_g - eps/s).
double toy_l2_value(const ToyState& state, double x_g, double eps);

/// d L2_hat / d theta = -(1+s^2)^-1 delta_{phi,psi} dG/dtheta with dG/dtheta = 1.
/// `z` and `sigma_init` enter only through dG/dtheta, which is 1 for the toy
/// generator G(z) = theta + z.
double toy_l2_gradient(const ToyState& state, double z, double sigma_init);

/// ||theta - mu||^2 / (1 + sigma^2)^2: the exact MESM value for data N(mu, I)
/// and generator N(theta, I).
double fisher_divergence_analytic(std::span<const double> theta, double sigma,
                                  std::span<const double> data_mean = {});

/// Draw-then-integrate Monte Carlo with a standard error.
using Sampler = std::function<std::vector<double>(Rng&)>;
using Integrand = std::function<std::vector<double>(std::span<const double>)>;
MCEstimate mc_estimate(const Sampler& sampler, const Integrand& integrand, std::size_t n,
                       Rng& rng);

/// f(x_t) = mu + (x_t - mu) / (1 + sigma^2) as a graph-appendable denoiser.
class GaussianDenoiser final : public nn::Denoiser {
 public:
  explicit GaussianDenoiser(GaussianWorld world) : world_(std::move(world)) {}
  std::size_t data_dim() const override { return world_.dim; }
  nn::Attached attach(ad::Graph& graph, ad::Var x_t, std::span<const double> sigma,
                      nn::Role role) const override;

 private:
  GaussianWorld world_;
};

/// Toy fake-score denoiser x/(1+s^2) + psi s^2/(1+s^2); psi is one leaf.
class ToyFakeDenoiser final : public nn::Denoiser {
 public:
  explicit ToyFakeDenoiser(std::vector<double> psi) : psi_(std::move(psi)) {}
  std::size_t data_dim() const override { return psi_.size(); }
  nn::Attached attach(ad::Graph& graph, ad::Var x_t, std::span<const double> sigma,
                      nn::Role role) const override;

 private:
  std::vector<double> psi_;
};

/// Toy generator G(z) = theta + z, i.e. p_theta = N(theta, I); theta is one leaf.
class ShiftGenerator final : public nn::Generator {
 public:
  explicit ShiftGenerator(std::vector<double> theta) : theta_(std::move(theta)) {}
  std::size_t data_dim() const override { return theta_.size(); }
  nn::Attached attach(ad::Graph& graph, const Tensor& z, nn::Role role) const override;

 private:
  std::vector<double> theta_;
};

}  // namespace sid::oracle
