#include "sid/losses.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sid::loss {

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Tensor column_of(std::span<const double> values, auto&& fn) {
  Tensor out(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = fn(values[i]);
  out.check_finite("per-row coefficient");
  return out;
}

// Shared front half of every generator loss: x_g = G(z), x_t = x_g + sigma eps,
// and both denoisers evaluated at x_t with frozen weights.
struct GeneratorGraph {
  ad::Graph graph;
  nn::Attached generator;
  ad::Var x_g;
  ad::Var f_phi;
  ad::Var f_psi;
  ad::Var diff;  // f_phi - f_psi
};

void build_generator_graph(GeneratorGraph& gg, const nn::Denoiser& phi, const nn::Denoiser& psi,
                           const nn::Generator& generator, const GeneratorDraws& draws,
                           bool score_gradients) {
  const std::size_t rows = draws.z.rows();
  if (rows == 0) throw std::invalid_argument("generator loss needs a non-empty batch");
  if (draws.eps.shape() != draws.z.shape() || draws.sigma.size() != rows) {
    throw ShapeError("generator draws have inconsistent shapes");
  }
  if (phi.data_dim() != generator.data_dim() || psi.data_dim() != generator.data_dim()) {
    throw ShapeError("generator and denoisers disagree on data dimension");
  }
  ad::Graph& g = gg.graph;
  gg.generator = generator.attach(g, draws.z, nn::Role::Trainable);
  gg.x_g = gg.generator.output;

  Tensor noise(draws.eps.rows(), draws.eps.cols());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < noise.cols(); ++j) noise(i, j) = draws.sigma[i] * draws.eps(i, j);
  }
  ad::Var x_t = g.add(gg.x_g, g.constant(std::move(noise), "sigma*eps"));
  if (!score_gradients) x_t = g.stop_gradient(x_t);

  gg.f_phi = phi.attach(g, x_t, draws.sigma, nn::Role::Frozen).output;
  gg.f_psi = psi.attach(g, x_t, draws.sigma, nn::Role::Frozen).output;
  gg.diff = g.sub(gg.f_phi, gg.f_psi);
}

LossResult finish(GeneratorGraph& gg, ad::Var per_row, const GeneratorDraws& draws) {
  ad::Graph& g = gg.graph;
  const ad::Var root = g.mean(per_row);
  LossResult out;
  out.report.value = g.value(root).item();
  out.report.batch_size = draws.z.rows();
  out.report.sigma_mean = mean_of(draws.sigma);
  const ad::Gradients grads = g.backward(root);
  out.gradient = nn::flatten_gradient(grads, gg.generator);
  if (!all_finite(out.gradient)) throw NonFiniteError("generator loss gradient is not finite");
  return out;
}

}  // namespace

DsmDraws draw_dsm(std::size_t rows, std::size_t dim, Rng& rng, const DsmOptions& options) {
  DsmDraws d;
  d.sigma.resize(rows);
  for (double& s : d.sigma) s = diffusion::sample_psi_sigma(rng, options.p_mean, options.p_std);
  d.eps = rng.normal(rows, dim);
  return d;
}

double dsm_weight(double sigma, double sigma_data) {
  return (sigma * sigma + sigma_data * sigma_data) / ((sigma * sigma_data) * (sigma * sigma_data));
}

LossResult dsm_loss(const nn::Denoiser& net, const Tensor& x_clean, const DsmDraws& draws,
                    const DsmOptions& options) {
  const std::size_t rows = x_clean.rows();
  if (rows == 0) throw std::invalid_argument("dsm_loss needs a non-empty batch");
  if (draws.eps.shape() != x_clean.shape() || draws.sigma.size() != rows) {
    throw ShapeError("dsm draws do not match the batch");
  }
  Tensor x_t(rows, x_clean.cols());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < x_t.cols(); ++j) {
      x_t(i, j) = x_clean(i, j) + draws.sigma[i] * draws.eps(i, j);
    }
  }
  ad::Graph g;
  const ad::Var x = g.constant(std::move(x_t), "x_t");
  const nn::Attached net_out = net.attach(g, x, draws.sigma, nn::Role::Trainable);
  const ad::Var err = g.sub(net_out.output, g.constant(x_clean, "x_clean"));
  const ad::Var sq = g.row_sum(g.mul(err, err));
  const Tensor gamma =
      column_of(draws.sigma, [&](double s) { return dsm_weight(s, options.sigma_data); });
  const ad::Var root = g.mean(g.row_scale(sq, g.constant(gamma, "gamma")));

  LossResult out;
  out.report.value = g.value(root).item();
  out.report.batch_size = rows;
  out.report.sigma_mean = mean_of(draws.sigma);
  out.report.terms["dsm"] = out.report.value;
  out.gradient = nn::flatten_gradient(g.backward(root), net_out);
  if (!all_finite(out.gradient)) throw NonFiniteError("dsm gradient is not finite");
  return out;
}

LossResult dsm_loss(const nn::Denoiser& net, const Tensor& x_clean, Rng& rng,
                    const DsmOptions& options) {
  const DsmDraws draws = draw_dsm(x_clean.rows(), x_clean.cols(), rng, options);
  return dsm_loss(net, x_clean, draws, options);
}

GeneratorDraws draw_generator(std::size_t rows, std::size_t dim,
                              const diffusion::NoiseSchedule& schedule, Rng& rng) {
  GeneratorDraws d;
  d.z = rng.normal(rows, dim);
  d.sigma.resize(rows);
  for (double& s : d.sigma) s = diffusion::sample_theta_time(schedule, rng).sigma;
  d.eps = rng.normal(rows, dim);
  return d;
}

Tensor delta_hat(const nn::Denoiser& phi, const nn::Denoiser& psi, const Tensor& x_t,
                 std::span<const double> sigma) {
  const Tensor a = nn::evaluate(phi, x_t, sigma);
  const Tensor b = nn::evaluate(psi, x_t, sigma);
  Tensor out(x_t.rows(), x_t.cols());
  for (std::size_t i = 0; i < x_t.rows(); ++i) {
    if (!(sigma[i] > 0.0)) throw std::domain_error("delta_hat: sigma must be positive");
    const double inv = 1.0 / (sigma[i] * sigma[i]);
    for (std::size_t j = 0; j < x_t.cols(); ++j) out(i, j) = (a(i, j) - b(i, j)) * inv;
  }
  out.check_finite("delta_hat");
  return out;
}

LossResult l1_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, const GeneratorDraws& draws,
                       const GeneratorLossOptions& options) {
  GeneratorGraph gg;
  build_generator_graph(gg, phi, psi, generator, draws, options.score_gradients);
  ad::Graph& g = gg.graph;
  const Tensor inv_s4 = column_of(draws.sigma, [](double s) { return 1.0 / (s * s * s * s); });
  const ad::Var per_row =
      g.row_scale(g.row_sum(g.mul(gg.diff, gg.diff)), g.constant(inv_s4, "sigma^-4"));
  LossResult out = finish(gg, per_row, draws);
  out.report.terms["l1"] = out.report.value;
  return out;
}

LossResult l2_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, const GeneratorDraws& draws,
                       const GeneratorLossOptions& options) {
  GeneratorGraph gg;
  build_generator_graph(gg, phi, psi, generator, draws, options.score_gradients);
  ad::Graph& g = gg.graph;
  const Tensor inv_s4 = column_of(draws.sigma, [](double s) { return 1.0 / (s * s * s * s); });
  const ad::Var proj = g.row_sum(g.mul(gg.diff, g.sub(gg.f_phi, gg.x_g)));
  const ad::Var per_row = g.row_scale(proj, g.constant(inv_s4, "sigma^-4"));
  LossResult out = finish(gg, per_row, draws);
  out.report.terms["l2"] = out.report.value;
  return out;
}

LossResult sid_fused_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                          const nn::Generator& generator, const GeneratorDraws& draws,
                          const GeneratorLossOptions& options) {
  if (!std::isfinite(options.alpha)) throw std::invalid_argument("alpha must be finite");
  GeneratorGraph gg;
  build_generator_graph(gg, phi, psi, generator, draws, options.score_gradients);
  ad::Graph& g = gg.graph;
  const double c = static_cast<double>(generator.data_dim());

  // omega / sigma^4 = C / ||x_g - f_phi||_1, the sigma^4 factors cancelling exactly.
  const ad::Var l1_dist = g.stop_gradient(g.row_sum(g.abs(g.sub(gg.x_g, gg.f_phi))));
  const ad::Var weight = g.scale(g.clamped_reciprocal(l1_dist, options.weight_floor), c);

  const ad::Var sq = g.row_sum(g.mul(gg.diff, gg.diff));
  const ad::Var weighted_sq = g.row_scale(sq, weight);
  ad::Var per_row;
  ad::Var weighted_delta{};
  if (options.objective == GeneratorObjective::Fused) {
    const ad::Var cross = g.row_sum(g.mul(gg.diff, g.sub(gg.f_psi, gg.x_g)));
    weighted_delta = g.row_scale(cross, weight);
    per_row = g.add(g.scale(weighted_sq, 1.0 - options.alpha), weighted_delta);
  } else {
    per_row = weighted_sq;
  }
  LossResult out = finish(gg, per_row, draws);

  const Tensor& w = g.value(weight);
  double omega_sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double s2 = draws.sigma[i] * draws.sigma[i];
    omega_sum += w[i] * s2 * s2;
  }
  const double rows = static_cast<double>(w.size());
  out.report.terms["weight"] = mean_of(w.data());
  out.report.terms["omega"] = omega_sum / rows;
  out.report.terms["l1"] = mean_of(g.value(weighted_sq).data());
  out.report.terms["delta"] =
      options.objective == GeneratorObjective::Fused ? mean_of(g.value(weighted_delta).data()) : 0.0;
  return out;
}

LossResult l1_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, std::size_t batch,
                       const diffusion::NoiseSchedule& schedule, Rng& rng,
                       const GeneratorLossOptions& options) {
  return l1_hat_loss(phi, psi, generator,
                     draw_generator(batch, generator.data_dim(), schedule, rng), options);
}

LossResult l2_hat_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                       const nn::Generator& generator, std::size_t batch,
                       const diffusion::NoiseSchedule& schedule, Rng& rng,
                       const GeneratorLossOptions& options) {
  return l2_hat_loss(phi, psi, generator,
                     draw_generator(batch, generator.data_dim(), schedule, rng), options);
}

LossResult sid_fused_loss(const nn::Denoiser& phi, const nn::Denoiser& psi,
                          const nn::Generator& generator, std::size_t batch,
                          const diffusion::NoiseSchedule& schedule, Rng& rng,
                          const GeneratorLossOptions& options) {
  return sid_fused_loss(phi, psi, generator,
                        draw_generator(batch, generator.data_dim(), schedule, rng), options);
}

oracle::MCEstimate mesm_projected_estimate(const VectorFn& delta, const VectorFn& phi,
                                           const PointSampler& x_g_sampler, double sigma,
                                           std::size_t n, Rng& rng) {
  if (!(sigma > 0.0)) throw std::domain_error("mesm_projected_estimate: sigma must be positive");
  oracle::MeanAccumulator acc(1);
  std::vector<double> x_t;
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<double> x_g = x_g_sampler(rng);
    x_t.resize(x_g.size());
    for (std::size_t j = 0; j < x_g.size(); ++j) x_t[j] = x_g[j] + sigma * rng.normal();
    const std::vector<double> d = delta(x_t);
    const std::vector<double> f = phi(x_t);
    double s = 0.0;
    for (std::size_t j = 0; j < x_g.size(); ++j) s += d[j] * (f[j] - x_g[j]);
    acc.add(s / (sigma * sigma));
  }
  return acc.result();
}

oracle::MCEstimate mesm_direct_estimate(const VectorFn& delta, const PointSampler& x_g_sampler,
                                        double sigma, std::size_t n, Rng& rng) {
  oracle::MeanAccumulator acc(1);
  std::vector<double> x_t;
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<double> x_g = x_g_sampler(rng);
    x_t.resize(x_g.size());
    for (std::size_t j = 0; j < x_g.size(); ++j) x_t[j] = x_g[j] + sigma * rng.normal();
    const std::vector<double> d = delta(x_t);
    double s = 0.0;
    for (double v : d) s += v * v;
    acc.add(s);
  }
  return acc.result();
}

}  // namespace sid::loss
