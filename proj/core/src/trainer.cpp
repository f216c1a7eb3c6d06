#include "sid/trainer.hpp"

#include <cmath>
#include <string>

namespace sid::train {

DivergenceError::DivergenceError(std::uint64_t step, const std::string& what)
    : std::runtime_error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

void adam_or_diverge(std::span<double> params, std::span<const double> gradient,
                     optim::AdamState& state, const optim::AdamConfig& config, std::uint64_t step) {
  if (!all_finite(gradient)) throw DivergenceError(step, "non-finite gradient");
  optim::adam_step(params, gradient, state, config);
  if (!all_finite(params)) throw DivergenceError(step, "non-finite parameters after update");
}

}  // namespace

void TeacherConfig::validate() const {
  network.validate();
  optim::AdamConfig{lr, beta1, beta2, eps, 1.0}.validate();
  require(lr > 0.0, "teacher lr must be positive");
  require(ema_kimg >= 0.0, "teacher ema_kimg must be >= 0");
  require(batch_size > 0, "teacher batch_size must be positive");
  require(log_every_images > 0, "teacher log_every_images must be positive");
  require(p_std > 0.0, "teacher p_std must be positive");
}

TeacherResult pretrain_teacher(const DataSampler& data, const TeacherConfig& config) {
  config.validate();
  Rng rng(config.seed);
  nn::NetworkParams params = nn::NetworkParams::random(config.network, rng);
  nn::NetworkParams ema = params;
  optim::AdamState adam = optim::AdamState::zeros(params.size());
  const optim::AdamConfig adam_config{config.lr, config.beta1, config.beta2, config.eps, 1.0};
  const loss::DsmOptions dsm{config.p_mean, config.p_std, config.network.sigma_data};
  const double decay = optim::ema_decay(config.batch_size, config.ema_kimg);

  TeacherResult result;
  std::uint64_t images = 0, step = 0, next_log = config.log_every_images;
  double loss_sum = 0.0;
  std::uint64_t loss_count = 0;
  while (images < config.budget_images) {
    const Tensor x = data(config.batch_size, rng);
    if (x.rows() != config.batch_size || x.cols() != config.network.data_dim) {
      throw ShapeError("teacher data sampler returned " + to_string(x.shape()));
    }
    loss::LossResult r;
    try {
      r = loss::dsm_loss(nn::MlpDenoiser(params), x, rng, dsm);
    } catch (const NonFiniteError& e) {
      throw DivergenceError(step, e.what());
    }
    if (!std::isfinite(r.report.value)) throw DivergenceError(step, "non-finite DSM loss");
    adam_or_diverge(params.values(), r.gradient, adam, adam_config, step);
    optim::ema_update(ema.values(), params.values(), decay);
    ++step;
    images += config.batch_size;
    loss_sum += r.report.value;
    ++loss_count;
    if (images >= next_log || images >= config.budget_images) {
      result.log.push_back({images, step, loss_sum / static_cast<double>(loss_count)});
      loss_sum = 0.0;
      loss_count = 0;
      while (next_log <= images) next_log += config.log_every_images;
    }
  }
  result.phi = std::move(ema);
  return result;
}

void SiDConfig::validate() const {
  require(std::isfinite(alpha), "alpha must be finite");
  adam_psi().validate();
  adam_theta().validate();
  require(lr_psi > 0.0 && lr_theta > 0.0, "learning rates must be positive");
  require(ema_kimg >= 0.0, "ema_kimg must be >= 0");
  require(batch_size > 0, "batch_size must be positive");
  require(sigma_init > 0.0, "sigma_init must be positive");
  schedule.validate();
  require(budget_images > 0, "budget_images must be positive");
  require(metric_every_images > 0, "metric_every_images must be positive");
  require(weight_floor > 0.0, "weight_floor must be positive");
  require(p_std > 0.0, "p_std must be positive");
}

optim::AdamConfig SiDConfig::adam_psi() const {
  return {lr_psi, adam_beta1_psi, adam_beta2, adam_eps, loss_scale_psi};
}

optim::AdamConfig SiDConfig::adam_theta() const {
  return {lr_theta, adam_beta1_theta, adam_beta2, adam_eps, loss_scale_theta};
}

loss::GeneratorLossOptions SiDConfig::generator_options() const {
  return {alpha, score_gradients, weight_floor, objective};
}

TrainState init_from_teacher(const nn::NetworkParams& phi, std::uint64_t seed) {
  TrainState s;
  s.phi = phi;
  s.psi = phi;
  s.theta = phi;
  s.theta_ema = phi;
  s.best_theta_ema = phi;
  s.adam_psi = optim::AdamState::zeros(phi.size());
  s.adam_theta = optim::AdamState::zeros(phi.size());
  s.rng = Rng(seed);
  return s;
}

void shift_generator_output(nn::NetworkParams& theta, std::span<const double> offset,
                            double sigma_init) {
  const nn::NetworkConfig& cfg = theta.config();
  if (offset.size() != cfg.data_dim) throw ShapeError("shift_generator_output: offset length");
  // G = c_skip x + c_out F, so a bias change b in F's last layer moves G by c_out b.
  const double c_out = diffusion::precondition_coeffs(sigma_init, cfg.sigma_data).c_out;
  const nn::LayerSlice last = theta.layers().back();
  auto values = theta.values();
  for (std::size_t j = 0; j < offset.size(); ++j) values[last.bias_offset() + j] += offset[j] / c_out;
}

loss::LossReport psi_step(TrainState& state, const SiDConfig& config) {
  const std::size_t dim = state.theta.config().data_dim;
  const Tensor z = state.rng.normal(config.batch_size, dim);
  const Tensor x_g = nn::generate(state.theta, z, config.sigma_init);
  const loss::DsmOptions dsm{config.p_mean, config.p_std, state.psi.config().sigma_data};
  loss::LossResult r;
  try {
    r = loss::dsm_loss(nn::MlpDenoiser(state.psi), x_g, state.rng, dsm);
  } catch (const NonFiniteError& e) {
    throw DivergenceError(state.step, e.what());
  }
  if (!std::isfinite(r.report.value)) throw DivergenceError(state.step, "non-finite fake-score loss");
  adam_or_diverge(state.psi.values(), r.gradient, state.adam_psi, config.adam_psi(), state.step);
  state.last_loss_psi = r.report.value;
  return r.report;
}

loss::LossReport theta_step(TrainState& state, const SiDConfig& config) {
  const nn::MlpDenoiser phi(state.phi);
  const nn::MlpDenoiser psi(state.psi);
  const nn::MlpGenerator generator(state.theta, config.sigma_init);
  loss::LossResult r;
  try {
    r = loss::sid_fused_loss(phi, psi, generator, config.batch_size, config.schedule, state.rng,
                             config.generator_options());
  } catch (const NonFiniteError& e) {
    throw DivergenceError(state.step, e.what());
  }
  if (!std::isfinite(r.report.value)) throw DivergenceError(state.step, "non-finite generator loss");
  adam_or_diverge(state.theta.values(), r.gradient, state.adam_theta, config.adam_theta(),
                  state.step);
  optim::ema_update(state.theta_ema.values(), state.theta.values(),
                    optim::ema_decay(config.batch_size, config.ema_kimg));
  state.last_loss_theta = r.report.value;
  state.last_sigma_mean = r.report.sigma_mean;
  return r.report;
}

void train_loop(TrainState& state, const SiDConfig& config, const EvalHook& eval,
                std::optional<std::uint64_t> stop_at_images) {
  config.validate();
  if (state.images_seen != state.step * config.batch_size) {
    throw std::invalid_argument("train state does not match the configured batch size");
  }
  auto record = [&] {
    const double metric = eval ? eval(state.theta_ema, state.images_seen) : 0.0;
    state.log.push_back({state.images_seen, state.step, state.last_loss_psi, state.last_loss_theta,
                         metric, config.alpha, state.last_sigma_mean});
    if (eval && (!state.best_metric || metric < *state.best_metric)) {
      state.best_metric = metric;
      state.best_theta_ema = state.theta_ema;
    }
  };
  const std::uint64_t limit =
      stop_at_images ? std::min(*stop_at_images, config.budget_images) : config.budget_images;
  while (state.images_seen < limit) {
    psi_step(state, config);
    theta_step(state, config);
    ++state.step;
    state.images_seen += config.batch_size;
    const std::uint64_t cursor = state.images_seen / config.metric_every_images;
    const bool at_budget = state.images_seen >= config.budget_images;
    if (cursor > state.eval_cursor || at_budget) {
      state.eval_cursor = cursor;
      record();
    }
  }
}

}  // namespace sid::train
