#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sid::optim {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Multiplies the gradient before the moment updates.
  double loss_scale = 1.0;

  void validate() const;
};

/// First and second moments plus the bias-correction step counter.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of `params` in place. Throws
/// NonFiniteError before touching anything when the gradient is not finite.
void adam_step(std::span<double> params, std::span<const double> gradient, AdamState& state,
               const AdamConfig& config);

/// d = 0.5^(batch / (ema_kimg * 1000)); zero ema_kimg disables averaging (d = 0).
double ema_decay(std::size_t batch_size, double ema_kimg);

/// ema <- d ema + (1 - d) value.
void ema_update(std::span<double> ema, std::span<const double> value, double decay);

}  // namespace sid::optim
