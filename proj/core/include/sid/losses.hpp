#pragma once

// Training and diagnostic losses. Every estimator has two entry points: one
// taking explicit noise draws (for exact regression checks on identical
// draws) and one sampling the draws from an Rng.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sid/diffusion.hpp"
#include "sid/network.hpp"
#include "sid/oracle.hpp"
#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::loss {

struct LossReport {
  double value = 0.0;
  std::map<std::string, double> terms;
  double sigma_mean = 0.0;
  std::size_t batch_size = 0;
};

/// Loss value and its gradient with respect to the trainable network's flat parameters.
struct LossResult {
  LossReport report;
  std::vector<double> gradient;
};

// --- denoising score matching ----------------------------------------------

struct DsmOptions {
  double p_mean = -1.2;
  double p_std = 1.2;
  double sigma_data = 0.5;
};

struct DsmDraws {
  std::vector<double> sigma;  ///< one per row
  Tensor eps;
};

DsmDraws draw_dsm(std::size_t rows, std::size_t dim, Rng& rng, const DsmOptions& options);

/// gamma(sigma) = (sigma^2 + sigma_data^2) / (sigma sigma_data)^2.
double dsm_weight(double sigma, double sigma_data);

/// mean_i gamma(sigma_i) ||f(x_i + sigma_i eps_i, sigma_i) - x_i||^2 and its
/// gradient with respect to the denoiser's parameters.
LossResult dsm_loss(const nn::Denoiser& net, const Tensor& x_clean, const DsmDraws& draws,
                    const DsmOptions& options);
LossResult dsm_loss(const nn::Denoiser& net, const Tensor& x_clean, Rng& rng,
                    const DsmOptions& options);

// --- generator losses --------------------------------------------------------

/// Which generator objective the fused estimator evaluates.
enum class GeneratorObjective {
  Fused,   ///< (1 - alpha) L1 + L_delta, omega-weighted
  L1Only,  ///< omega-weighted L1 alone
};

struct GeneratorLossOptions {
  double alpha = 1.2;
  /// Backpropagate through f_phi and f_psi with respect to x_t. Disabling it
  /// leaves only the direct x_g path.
  bool score_gradients = true;
  double weight_floor = 1e-8;
  GeneratorObjective objective = GeneratorObjective::Fused;
};

struct GeneratorDraws {
  Tensor z;
  Tensor eps;
  std::vector<double> sigma;  ///< one per row
};

/// z, eps ~ N(0, I); per-row t ~ U[0, t_max/1000] mapped through the schedule.
GeneratorDraws draw_generator(std::size_t rows, std::size_t dim,
                              const diffusion::NoiseSchedule& schedule, Rng& rng);

/// (f_phi(x_t) - f_psi(x_t)) / sigma^2, row-wise.
Tensor delta_hat(const nn::Denoiser& phi, const nn::Denoiser& psi, const Tensor& x_t,
                 std::span<const double> sigma);

/// mean_i ||delta_hat(x_t,i)||^2 with x_t = G(z) + sigma eps.
LossResult l1_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, const GeneratorDraws& draws,
                       const GeneratorLossOptions& options = {});

/// mean_i sigma_i^-2 delta_hat(x_t,i)^T (f_phi(x_t,i) - x_g,i).
LossResult l2_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, const GeneratorDraws& draws,
                       const GeneratorLossOptions& options = {});

/// Per row: omega/sigma^4 [(1 - alpha)||f_phi - f_psi||^2 + (f_phi - f_psi)^T(f_psi - x_g)]
/// with omega = C sigma^4 / max(||x_g - f_phi||_1, floor) held constant
/// (stop-gradient) and C = data dimension; averaged over rows.
///
/// Terms: "l1" and "delta" are the row means of the two weighted pieces, so
/// value = (1 - alpha) l1 + delta; "weight" is the mean of omega/sigma^4 and
/// "omega" the mean of omega.
LossResult sid_fused_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                          const nn::Generator& generator, const GeneratorDraws& draws,
                          const GeneratorLossOptions& options);

LossResult l1_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, std::size_t batch,
                       const diffusion::NoiseSchedule& schedule, Rng& rng,
                       const GeneratorLossOptions& options = {});
LossResult l2_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, std::size_t batch,
                       const diffusion::NoiseSchedule& schedule, Rng& rng,
                       const GeneratorLossOptions& options = {});
LossResult sid_fused_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                          const nn::Generator& generator, std::size_t batch,
                          const diffusion::NoiseSchedule& schedule, Rng& rng,
                          const GeneratorLossOptions& options);

// --- projected score matching diagnostics -----------------------------------

using VectorFn = std::function<std::vector<double>(std::span<const double>)>;
using PointSampler = std::function<std::vector<double>(Rng&)>;

/// Monte Carlo of sigma^-2 delta(x_t)^T (f_phi(x_t) - x_g) over x_g ~ sampler,
/// x_t = x_g + sigma eps. `delta` must be the exact score difference.
oracle::MCEstimate mesm_projected_estimate(const VectorFn& delta, const VectorFn& phi,
                                           const PointSampler& x_g_sampler, double sigma,
                                           std::size_t n, Rng& rng);

/// Monte Carlo of ||delta(x_t)||^2 over the same diffused generator distribution.
oracle::MCEstimate mesm_direct_estimate(const VectorFn& delta, const PointSampler& x_g_sampler,
                                        double sigma, std::size_t n, Rng& rng);

}  // namespace sid::loss
