#include "sid/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sid::diffusion {

void NoiseSchedule::validate() const {
  if (!(sigma_min > 0.0) || !(sigma_max > 0.0) || !(sigma_min < sigma_max)) {
    throw std::invalid_argument("noise schedule requires 0 < sigma_min < sigma_max");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("noise schedule requires rho > 0");
  if (t_max < 0 || t_max > 1000) throw std::invalid_argument("t_max must lie in [0, 1000]");
}

double sigma_at(const NoiseSchedule& schedule, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("sigma_at: t = " + std::to_string(t) + " outside [0, 1]");
  }
  const double lo = std::pow(schedule.sigma_min, 1.0 / schedule.rho);
  const double hi = std::pow(schedule.sigma_max, 1.0 / schedule.rho);
  if (t == 1.0) return schedule.sigma_max;
  return std::pow(hi + (1.0 - t) * (lo - hi), schedule.rho);
}

TimeDraw sample_theta_time(const NoiseSchedule& schedule, Rng& rng) {
  const double t = rng.uniform() * (static_cast<double>(schedule.t_max) / 1000.0);
  return {t, sigma_at(schedule, t)};
}

double sample_psi_sigma(Rng& rng, double p_mean, double p_std) {
  if (!(p_std > 0.0)) throw std::invalid_argument("sample_psi_sigma: p_std must be positive");
  return std::exp(p_mean + p_std * rng.normal());
}

DiffusionSample perturb(const Tensor& x_g, double sigma, Rng& rng) {
  return perturb(x_g, sigma, rng.normal(x_g.rows(), x_g.cols()));
}

DiffusionSample perturb(const Tensor& x_g, double sigma, const Tensor& eps) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb: sigma must be non-negative");
  if (eps.shape() != x_g.shape()) throw ShapeError("perturb: eps shape differs from x_g");
  Tensor x_t(x_g.rows(), x_g.cols());
  for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] = x_g[i] + sigma * eps[i];
  x_t.check_finite("perturbed sample");
  return {x_g, eps, sigma, std::move(x_t)};
}

Tensor conditional_score(const Tensor& x_t, const Tensor& x_ref, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("conditional_score: sigma must be positive");
  if (x_t.shape() != x_ref.shape()) throw ShapeError("conditional_score: shape mismatch");
  Tensor out(x_t.rows(), x_t.cols());
  const double inv = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_ref[i] - x_t[i]) * inv;
  out.check_finite("conditional score");
  return out;
}

Preconditioning precondition_coeffs(double sigma, double sigma_data) {
  const double s2 = sigma * sigma;
  const double d2 = sigma_data * sigma_data;
  const double root = std::sqrt(s2 + d2);
  return {d2 / (s2 + d2), sigma * sigma_data / root, 1.0 / root, std::log(sigma) / 4.0};
}

std::vector<double> heun_sigma_grid(const NoiseSchedule& schedule, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("heun sampler needs n_steps >= 1");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n_steps) + 1);
  if (n_steps == 1) {
    grid.push_back(schedule.sigma_max);
  } else {
    const double lo = std::pow(schedule.sigma_min, 1.0 / schedule.rho);
    const double hi = std::pow(schedule.sigma_max, 1.0 / schedule.rho);
    for (int i = 0; i < n_steps; ++i) {
      const double frac = static_cast<double>(i) / static_cast<double>(n_steps - 1);
      grid.push_back(std::pow(hi + frac * (lo - hi), schedule.rho));
    }
  }
  grid.push_back(0.0);
  return grid;
}

Tensor heun_sample(const DenoiseFn& denoise, const NoiseSchedule& schedule, int n_steps,
                   std::size_t batch, std::size_t dim, Rng& rng) {
  const std::vector<double> grid = heun_sigma_grid(schedule, n_steps);
  Tensor x = rng.normal(batch, dim);
  for (double& v : x.data()) v *= grid.front();

  auto slope = [&](const Tensor& state, double sigma) {
    Tensor d = denoise(state, sigma);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (state[i] - d[i]) / sigma;
    return d;
  };

  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double cur = grid[i];
    const double next = grid[i + 1];
    const double h = next - cur;
    const Tensor d = slope(x, cur);
    Tensor euler(x.rows(), x.cols());
    for (std::size_t k = 0; k < x.size(); ++k) euler[k] = x[k] + h * d[k];
    if (next > 0.0) {
      const Tensor d2 = slope(euler, next);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = x[k] + 0.5 * h * (d[k] + d2[k]);
    } else {
      x = std::move(euler);
    }
    x.check_finite("heun sampler state at step " + std::to_string(i));
  }
  return x;
}

}  // namespace sid::diffusion
