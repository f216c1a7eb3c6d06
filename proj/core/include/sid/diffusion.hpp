#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::diffusion {

/// Noise levels sigma(t) = (smax^(1/rho) + (1 - t)(smin^(1/rho) - smax^(1/rho)))^rho on t in [0, 1].
struct NoiseSchedule {
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
  int t_max = 800;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

/// Forward-diffused sample with a_t = 1.
struct DiffusionSample {
  Tensor x_g;
  Tensor eps;
  double sigma = 0.0;
  Tensor x_t;
};

struct Preconditioning {
  double c_skip;
  double c_out;
  double c_in;
  double c_noise;
};

/// Timestep draw for a generator update.
struct TimeDraw {
  double t;
  double sigma;
};

double sigma_at(const NoiseSchedule& schedule, double t);

/// t ~ U[0, t_max / 1000], sigma = sigma_at(t).
TimeDraw sample_theta_time(const NoiseSchedule& schedule, Rng& rng);

/// ln(sigma) ~ N(p_mean, p_std^2).
double sample_psi_sigma(Rng& rng, double p_mean = -1.2, double p_std = 1.2);

/// x_t = x_g + sigma * eps with eps ~ N(0, I).
DiffusionSample perturb(const Tensor& x_g, double sigma, Rng& rng);
/// Same as above with a caller-supplied eps.
DiffusionSample perturb(const Tensor& x_g, double sigma, const Tensor& eps);

/// grad_x ln N(x_t; x_ref, sigma^2 I) = (x_ref - x_t) / sigma^2.
Tensor conditional_score(const Tensor& x_t, const Tensor& x_ref, double sigma);

Preconditioning precondition_coeffs(double sigma, double sigma_data);

/// D(x, sigma) evaluated on a batch at one noise level.
using DenoiseFn = std::function<Tensor(const Tensor& x, double sigma)>;

/// The deterministic sampler's noise levels: n_steps levels from sigma_max down
/// to sigma_min on the rho-spaced grid, followed by a terminal 0.
std::vector<double> heun_sigma_grid(const NoiseSchedule& schedule, int n_steps);

/// Second-order probability-flow integration from x ~ N(0, sigma_max^2 I).
/// Throws NonFiniteError if the state stops being finite.
Tensor heun_sample(const DenoiseFn& denoise, const NoiseSchedule& schedule, int n_steps,
                   std::size_t batch, std::size_t dim, Rng& rng);

}  // namespace sid::diffusion
