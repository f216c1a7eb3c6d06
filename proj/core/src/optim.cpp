#include "sid/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "sid/tensor.hpp"

namespace sid::optim {

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("adam lr must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("adam beta1 must lie in [0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam beta2 must lie in (0, 1)");
  if (!(eps >= 0.0)) throw std::invalid_argument("adam eps must be >= 0");
  if (!(loss_scale > 0.0) || !std::isfinite(loss_scale)) {
    throw std::invalid_argument("adam loss_scale must be finite and positive");
  }
}

void adam_step(std::span<double> params, std::span<const double> gradient, AdamState& state,
               const AdamConfig& config) {
  if (gradient.size() != params.size()) throw ShapeError("adam_step: gradient length differs from params");
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: moment length differs from params");
  }
  if (!all_finite(gradient)) throw NonFiniteError("adam_step: non-finite gradient");
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = config.loss_scale * gradient[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    const double denom = std::sqrt(v_hat) + config.eps;
    if (denom > 0.0) params[i] -= config.lr * m_hat / denom;
  }
}

double ema_decay(std::size_t batch_size, double ema_kimg) {
  if (!(ema_kimg >= 0.0)) throw std::invalid_argument("ema_kimg must be >= 0");
  if (ema_kimg == 0.0) return 0.0;
  return std::pow(0.5, static_cast<double>(batch_size) / (ema_kimg * 1000.0));
}

void ema_update(std::span<double> ema, std::span<const double> value, double decay) {
  if (ema.size() != value.size()) throw ShapeError("ema_update: length mismatch");
  for (std::size_t i = 0; i < ema.size(); ++i) ema[i] = decay * ema[i] + (1.0 - decay) * value[i];
}

}  // namespace sid::optim
