#include "sid/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sid::data {

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<std::vector<double>> means, std::vector<double> stds)
    : weights_(std::move(weights)), means_(std::move(means)), stds_(std::move(stds)) {
  if (weights_.empty() || weights_.size() != means_.size() || weights_.size() != stds_.size()) {
    throw std::invalid_argument("mixture needs matching weights, means and stds");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    total += w;
  }
  for (double& w : weights_) w /= total;
  for (const auto& m : means_) {
    if (m.size() != means_.front().size() || m.empty()) {
      throw std::invalid_argument("mixture means must share a positive dimension");
    }
  }
  for (double s : stds_) {
    if (!(s >= 0.0)) throw std::invalid_argument("mixture stds must be non-negative");
  }
}

std::vector<double> GaussianMixture::sample_point(Rng& rng) const {
  const double u = rng.uniform();
  std::size_t k = 0;
  double cum = weights_[0];
  while (u >= cum && k + 1 < weights_.size()) cum += weights_[++k];
  std::vector<double> x(dim());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = means_[k][j] + stds_[k] * rng.normal();
  return x;
}

Tensor GaussianMixture::sample(std::size_t n, Rng& rng) const {
  Tensor out(n, dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = sample_point(rng);
    std::copy(x.begin(), x.end(), out.row_span(i).begin());
  }
  return out;
}

std::vector<double> GaussianMixture::responsibilities(std::span<const double> x,
                                                      double sigma) const {
  const double d = static_cast<double>(dim());
  std::vector<double> logr(components());
  for (std::size_t k = 0; k < components(); ++k) {
    const double var = stds_[k] * stds_[k] + sigma * sigma;
    if (!(var > 0.0)) throw std::domain_error("mixture component has zero variance");
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - means_[k][j]) * (x[j] - means_[k][j]);
    logr[k] = std::log(weights_[k]) - 0.5 * d * std::log(var) - 0.5 * sq / var;
  }
  const double top = *std::max_element(logr.begin(), logr.end());
  double total = 0.0;
  for (double& v : logr) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logr) v /= total;
  return logr;
}

std::vector<double> GaussianMixture::diffused_score(std::span<const double> x, double sigma) const {
  if (x.size() != dim()) throw ShapeError("mixture score: dimension mismatch");
  const auto r = responsibilities(x, sigma);
  std::vector<double> s(dim(), 0.0);
  for (std::size_t k = 0; k < components(); ++k) {
    const double var = stds_[k] * stds_[k] + sigma * sigma;
    for (std::size_t j = 0; j < dim(); ++j) s[j] -= r[k] * (x[j] - means_[k][j]) / var;
  }
  return s;
}

std::vector<double> GaussianMixture::posterior_mean(std::span<const double> x, double sigma) const {
  if (x.size() != dim()) throw ShapeError("mixture posterior: dimension mismatch");
  const auto r = responsibilities(x, sigma);
  std::vector<double> m(dim(), 0.0);
  for (std::size_t k = 0; k < components(); ++k) {
    const double s2 = stds_[k] * stds_[k];
    const double gain = s2 / (s2 + sigma * sigma);
    for (std::size_t j = 0; j < dim(); ++j) {
      m[j] += r[k] * (means_[k][j] + gain * (x[j] - means_[k][j]));
    }
  }
  return m;
}

GaussianMixture ring8() {
  std::vector<std::vector<double>> means;
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 8.0;
    means.push_back({std::cos(a), std::sin(a)});
  }
  return GaussianMixture(std::vector<double>(8, 1.0), std::move(means),
                         std::vector<double>(8, 0.05));
}

DatasetKind parse_dataset(const std::string& name) {
  if (name == "gaussian") return DatasetKind::Gaussian;
  if (name == "ring8") return DatasetKind::Ring8;
  if (name == "moons") return DatasetKind::Moons;
  if (name == "checkerboard") return DatasetKind::Checkerboard;
  throw std::invalid_argument("unknown dataset '" + name +
                              "' (expected gaussian, ring8, moons or checkerboard)");
}

std::string dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Gaussian: return "gaussian";
    case DatasetKind::Ring8: return "ring8";
    case DatasetKind::Moons: return "moons";
    case DatasetKind::Checkerboard: return "checkerboard";
  }
  return "unknown";
}

std::size_t DatasetSpec::dim() const {
  return kind == DatasetKind::Gaussian ? gaussian_mean.size() : 2;
}

Tensor sample_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  switch (spec.kind) {
    case DatasetKind::Gaussian: {
      if (spec.gaussian_mean.empty()) throw std::invalid_argument("gaussian dataset needs dim >= 1");
      Tensor out = rng.normal(n, spec.gaussian_mean.size());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += spec.gaussian_mean[j];
      }
      return out;
    }
    case DatasetKind::Ring8:
      return ring8().sample(n, rng);
    case DatasetKind::Moons: {
      Tensor out(n, 2);
      for (std::size_t i = 0; i < n; ++i) {
        const bool upper = rng.uniform() < 0.5;
        const double a = std::numbers::pi * rng.uniform();
        const double x = upper ? std::cos(a) : 1.0 - std::cos(a);
        const double y = upper ? std::sin(a) : 0.5 - std::sin(a);
        out(i, 0) = x - 0.5 + 0.05 * rng.normal();
        out(i, 1) = y - 0.25 + 0.05 * rng.normal();
      }
      return out;
    }
    case DatasetKind::Checkerboard: {
      Tensor out(n, 2);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-2.0, 2.0);
        const double band = rng.uniform() < 0.5 ? 0.0 : -2.0;
        const double parity = std::fmod(std::floor(x) + 4.0, 2.0);
        out(i, 0) = x;
        out(i, 1) = rng.uniform() + band + parity;
      }
      return out;
    }
  }
  throw std::invalid_argument("unhandled dataset kind");
}

}  // namespace sid::data
