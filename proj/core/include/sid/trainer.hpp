#pragma once

// Teacher pretraining and the alternating fake-score / generator updates.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sid/diffusion.hpp"
#include "sid/losses.hpp"
#include "sid/network.hpp"
#include "sid/optim.hpp"
#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::train {

/// A loss or gradient stopped being finite at `step`.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t step, const std::string& what);
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

/// Draws n i.i.d. data vectors, one per row.
using DataSampler = std::function<Tensor(std::size_t n, Rng& rng)>;

struct TeacherConfig {
  nn::NetworkConfig network;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double ema_kimg = 50.0;
  std::size_t batch_size = 256;
  std::uint64_t budget_images = 1'000'000;
  std::uint64_t log_every_images = 50'000;
  double p_mean = -1.2;
  double p_std = 1.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TeacherLogRow {
  std::uint64_t images_seen = 0;
  std::uint64_t step = 0;
  double loss = 0.0;  ///< mean DSM loss since the previous row

  friend bool operator==(const TeacherLogRow&, const TeacherLogRow&) = default;
};

struct TeacherResult {
  nn::NetworkParams phi;  ///< EMA of the trained weights
  std::vector<TeacherLogRow> log;
};

/// Minimizes the DSM loss on fresh data batches until the image budget is
/// spent. A zero budget returns the seeded initialization.
TeacherResult pretrain_teacher(const DataSampler& data, const TeacherConfig& config);

struct SiDConfig {
  double alpha = 1.2;
  double lr_psi = 1e-5;
  double lr_theta = 1e-5;
  double adam_beta1_psi = 0.0;
  double adam_beta1_theta = 0.0;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double loss_scale_psi = 1.0;
  double loss_scale_theta = 100.0;
  double ema_kimg = 0.5;
  std::size_t batch_size = 256;
  double sigma_init = 2.5;
  diffusion::NoiseSchedule schedule;
  std::uint64_t budget_images = 2'000'000;
  std::uint64_t seed = 0;
  std::uint64_t metric_every_images = 100'000;

  loss::GeneratorObjective objective = loss::GeneratorObjective::Fused;
  bool score_gradients = true;
  double weight_floor = 1e-8;
  double p_mean = -1.2;
  double p_std = 1.2;

  void validate() const;
  optim::AdamConfig adam_psi() const;
  optim::AdamConfig adam_theta() const;
  loss::GeneratorLossOptions generator_options() const;
};

struct LogRow {
  std::uint64_t images_seen = 0;
  std::uint64_t step = 0;
  double loss_psi = 0.0;
  double loss_theta = 0.0;
  double metric = 0.0;
  double alpha = 0.0;
  double sigma_mean = 0.0;

  friend bool operator==(const LogRow&, const LogRow&) = default;
};

struct TrainState {
  std::uint64_t step = 0;
  std::uint64_t images_seen = 0;
  nn::NetworkParams phi;
  nn::NetworkParams psi;
  nn::NetworkParams theta;
  nn::NetworkParams theta_ema;
  optim::AdamState adam_psi;
  optim::AdamState adam_theta;
  Rng rng;

  std::vector<LogRow> log;
  nn::NetworkParams best_theta_ema;
  std::optional<double> best_metric;
  /// Last evaluation boundary passed, in units of metric_every_images.
  std::uint64_t eval_cursor = 0;
  double last_loss_psi = 0.0;
  double last_loss_theta = 0.0;
  double last_sigma_mean = 0.0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// theta, psi and theta_ema start as copies of phi; moments are zero.
TrainState init_from_teacher(const nn::NetworkParams& phi, std::uint64_t seed);

/// Adds `offset` to the mean of G(z) by moving the output-layer bias.
void shift_generator_output(nn::NetworkParams& theta, std::span<const double> offset,
                            double sigma_init);

/// DSM update of psi on detached generator samples x_g = G_theta(z).
loss::LossReport psi_step(TrainState& state, const SiDConfig& config);

/// Generator-loss update of theta through frozen phi and psi, then the EMA update.
loss::LossReport theta_step(TrainState& state, const SiDConfig& config);

/// Scores theta_ema; lower is better.
using EvalHook = std::function<double(const nn::NetworkParams& theta_ema, std::uint64_t images_seen)>;

/// Alternates psi_step and theta_step until budget_images (or `stop_at_images`,
/// when earlier) is reached. The hook runs each time images_seen crosses a
/// multiple of metric_every_images and once more at the budget.
void train_loop(TrainState& state, const SiDConfig& config, const EvalHook& eval,
                std::optional<std::uint64_t> stop_at_images = std::nullopt);

}  // namespace sid::train
