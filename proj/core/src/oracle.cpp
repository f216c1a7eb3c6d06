#include "sid/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace sid::oracle {

void GaussianWorld::validate() const {
  if (dim == 0) throw std::invalid_argument("GaussianWorld dim must be positive");
  if (mean.size() != dim) throw std::invalid_argument("GaussianWorld mean length must equal dim");
}

void MeanAccumulator::add(std::span<const double> x) {
  if (x.size() != mean_.size()) throw ShapeError("MeanAccumulator: dimension mismatch");
  ++n_;
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean_[i];
    mean_[i] += delta * inv_n;
    m2_[i] += delta * (x[i] - mean_[i]);
  }
}

MCEstimate MeanAccumulator::result() const {
  if (n_ < 2) throw std::logic_error("MC estimate needs at least two samples");
  MCEstimate est{mean_, std::vector<double>(mean_.size()), n_};
  const double n = static_cast<double>(n_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    est.std_error[i] = std::sqrt(std::max(m2_[i], 0.0) / (n - 1.0) / n);
  }
  return est;
}

namespace {

void check_world(const GaussianWorld& world, const Tensor& x_t, double sigma) {
  world.validate();
  if (x_t.cols() != world.dim) throw ShapeError("x_t columns differ from world dimension");
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
}

}  // namespace

Tensor analytic_denoiser(const GaussianWorld& world, const Tensor& x_t, double sigma) {
  check_world(world, x_t, sigma);
  const double shrink = 1.0 / (1.0 + sigma * sigma);
  Tensor out(x_t.rows(), x_t.cols());
  for (std::size_t i = 0; i < x_t.rows(); ++i) {
    for (std::size_t j = 0; j < x_t.cols(); ++j) {
      out(i, j) = world.mean[j] + (x_t(i, j) - world.mean[j]) * shrink;
    }
  }
  return out;
}

Tensor analytic_score(const GaussianWorld& world, const Tensor& x_t, double sigma) {
  check_world(world, x_t, sigma);
  const double shrink = 1.0 / (1.0 + sigma * sigma);
  Tensor out(x_t.rows(), x_t.cols());
  for (std::size_t i = 0; i < x_t.rows(); ++i) {
    for (std::size_t j = 0; j < x_t.cols(); ++j) {
      out(i, j) = -(x_t(i, j) - world.mean[j]) * shrink;
    }
  }
  return out;
}

double toy_delta(const ToyState& s) { return -s.psi / (1.0 + s.sigma * s.sigma); }

double toy_delta_exact(const ToyState& s) { return -s.theta / (1.0 + s.sigma * s.sigma); }

ToyLosses toy_losses(const ToyState& s) {
  const double denom = (1.0 + s.sigma * s.sigma) * (1.0 + s.sigma * s.sigma);
  return {s.theta * s.theta / denom, s.psi * s.psi / denom};
}

double toy_l2_value(const ToyState& s, double x_g, double eps) {
  const double denom = (1.0 + s.sigma * s.sigma) * (1.0 + s.sigma * s.sigma);
  return s.psi / denom * (x_g - eps / s.sigma);
}

double toy_l2_gradient(const ToyState& s, double /*z*/, double /*sigma_init*/) {
  constexpr double generator_sensitivity = 1.0;
  return -toy_delta(s) / (1.0 + s.sigma * s.sigma) * generator_sensitivity;
}

double fisher_divergence_analytic(std::span<const double> theta, double sigma,
                                  std::span<const double> data_mean) {
  if (!(sigma >= 0.0)) throw std::domain_error("sigma must be non-negative");
  if (!data_mean.empty() && data_mean.size() != theta.size()) {
    throw ShapeError("data mean length differs from theta");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - (data_mean.empty() ? 0.0 : data_mean[i]);
    sq += d * d;
  }
  const double denom = (1.0 + sigma * sigma) * (1.0 + sigma * sigma);
  return sq / denom;
}

MCEstimate mc_estimate(const Sampler& sampler, const Integrand& integrand, std::size_t n,
                       Rng& rng) {
  if (n < 2) throw std::invalid_argument("mc_estimate needs n >= 2");
  std::vector<double> first = integrand(sampler(rng));
  MeanAccumulator acc(first.size());
  acc.add(first);
  for (std::size_t i = 1; i < n; ++i) acc.add(integrand(sampler(rng)));
  return acc.result();
}

namespace {

// Column with 1/(1+s_i^2) per row, and the s_i^2/(1+s_i^2) complement.
std::pair<Tensor, Tensor> shrink_columns(std::span<const double> sigma) {
  Tensor shrink(sigma.size(), 1), pull(sigma.size(), 1);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw std::domain_error("sigma must be positive");
    const double s2 = sigma[i] * sigma[i];
    shrink[i] = 1.0 / (1.0 + s2);
    pull[i] = s2 / (1.0 + s2);
  }
  return {std::move(shrink), std::move(pull)};
}

}  // namespace

nn::Attached GaussianDenoiser::attach(ad::Graph& graph, ad::Var x_t,
                                      std::span<const double> sigma, nn::Role) const {
  const Tensor& x = graph.value(x_t);
  if (x.cols() != world_.dim || sigma.size() != x.rows()) {
    throw ShapeError("GaussianDenoiser: input shape mismatch");
  }
  auto [shrink, pull] = shrink_columns(sigma);
  Tensor offset(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) offset(i, j) = world_.mean[j] * pull[i];
  }
  const ad::Var scaled = graph.row_scale(x_t, graph.constant(std::move(shrink), "shrink"));
  return {graph.add(scaled, graph.constant(std::move(offset), "mu_pull")), {}};
}

nn::Attached ToyFakeDenoiser::attach(ad::Graph& graph, ad::Var x_t,
                                     std::span<const double> sigma, nn::Role role) const {
  const Tensor& x = graph.value(x_t);
  if (x.cols() != psi_.size() || sigma.size() != x.rows()) {
    throw ShapeError("ToyFakeDenoiser: input shape mismatch");
  }
  auto [shrink, pull] = shrink_columns(sigma);
  const Tensor psi_row(1, psi_.size(), psi_);
  nn::Attached out;
  ad::Var psi;
  if (role == nn::Role::Trainable) {
    psi = graph.parameter(psi_row, "psi");
    out.leaves.push_back(psi);
  } else {
    psi = graph.constant(psi_row, "psi");
  }
  // Broadcast psi over rows as ones(n,1) psi, then scale each row by s^2/(1+s^2).
  const ad::Var ones = graph.constant(Tensor(x.rows(), 1, 1.0), "ones");
  const ad::Var psi_rows = graph.matmul(ones, psi);
  const ad::Var scaled = graph.row_scale(x_t, graph.constant(std::move(shrink), "shrink"));
  out.output = graph.add(scaled, graph.row_scale(psi_rows, graph.constant(std::move(pull), "pull")));
  return out;
}

nn::Attached ShiftGenerator::attach(ad::Graph& graph, const Tensor& z, nn::Role role) const {
  if (z.cols() != theta_.size()) throw ShapeError("ShiftGenerator: z shape mismatch");
  const Tensor theta_row(1, theta_.size(), theta_);
  nn::Attached out;
  ad::Var theta;
  if (role == nn::Role::Trainable) {
    theta = graph.parameter(theta_row, "theta");
    out.leaves.push_back(theta);
  } else {
    theta = graph.constant(theta_row, "theta");
  }
  const ad::Var identity = graph.constant(Tensor::identity(theta_.size()), "I");
  out.output = graph.affine(graph.constant(z, "z"), identity, theta);
  return out;
}

}  // namespace sid::oracle
