#include "sid/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sid/losses.hpp"

namespace sid::eval {

namespace {

// |a - b| / se, with an exact-equality tolerance when se is zero.
double z_of(double a, double b, double se) {
  const double diff = std::fabs(a - b);
  if (se > 0.0) return diff / se;
  const double tol = 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)});
  return diff <= tol ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

IdentityReport compare(oracle::MCEstimate lhs, oracle::MCEstimate rhs, double n_sigma) {
  if (lhs.mean.size() != rhs.mean.size()) throw ShapeError("compare: dimension mismatch");
  IdentityReport r{std::move(lhs), std::move(rhs)};
  for (std::size_t i = 0; i < r.lhs.mean.size(); ++i) {
    const double se = std::hypot(r.lhs.std_error[i], r.rhs.std_error[i]);
    r.z_score = std::max(r.z_score, z_of(r.lhs.mean[i], r.rhs.mean[i], se));
  }
  r.pass = r.z_score <= n_sigma;
  return r;
}

std::vector<std::vector<double>> draw_probes(const PointSampler& clean, double sigma,
                                             std::size_t count, Rng& rng) {
  std::vector<std::vector<double>> probes;
  probes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto x = clean(rng);
    for (double& v : x) v += sigma * rng.normal();
    probes.push_back(std::move(x));
  }
  return probes;
}

TweedieReport check_tweedie(const PointSampler& clean, const ScoreFn& score, double sigma,
                            std::span<const std::vector<double>> probes, std::size_t n,
                            Rng& rng) {
  if (n < 1000) throw std::invalid_argument("check_tweedie needs n >= 1000");
  if (!(sigma > 0.0)) throw std::domain_error("check_tweedie: sigma must be positive");
  // One pool of clean draws shared by all probes.
  std::vector<std::vector<double>> pool(n);
  for (auto& x : pool) x = clean(rng);
  const std::size_t dim = pool.front().size();

  TweedieReport report;
  report.pass = true;
  std::vector<double> logw(n);
  for (const auto& probe : probes) {
    if (probe.size() != dim) throw ShapeError("check_tweedie: probe dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) sq += (probe[j] - pool[i][j]) * (probe[j] - pool[i][j]);
      logw[i] = -0.5 * sq / (sigma * sigma);
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    double wsum = 0.0, w2sum = 0.0;
    std::vector<double> est(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = std::exp(logw[i] - top);
      logw[i] = w;
      wsum += w;
      w2sum += w * w;
      for (std::size_t j = 0; j < dim; ++j) est[j] += w * pool[i][j];
    }
    for (double& v : est) v /= wsum;
    // Delta-method standard error of the self-normalized ratio.
    std::vector<double> var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = logw[i];
      for (std::size_t j = 0; j < dim; ++j) {
        const double r = pool[i][j] - est[j];
        var[j] += w * w * r * r;
      }
    }
    oracle::MCEstimate lhs{est, std::vector<double>(dim), n};
    for (std::size_t j = 0; j < dim; ++j) lhs.std_error[j] = std::sqrt(var[j]) / wsum;

    const auto s = score(probe, sigma);
    oracle::MCEstimate rhs{std::vector<double>(dim), std::vector<double>(dim, 0.0), n};
    for (std::size_t j = 0; j < dim; ++j) rhs.mean[j] = probe[j] + sigma * sigma * s[j];

    TweedieProbe p{probe, compare(std::move(lhs), std::move(rhs))};
    p.ess = wsum * wsum / w2sum;
    p.low_ess = p.ess < 10.0;
    report.pass = report.pass && p.report.pass;
    report.probes.push_back(std::move(p));
  }
  return report;
}

IdentityReport check_projection_identity(const PointSampler& clean, const ProjectionFn& u,
                                         const ScoreFn& score, double sigma, std::size_t n,
                                         Rng& rng) {
  if (!(sigma > 0.0)) throw std::domain_error("check_projection_identity: sigma must be positive");
  oracle::MeanAccumulator lhs(1), rhs(1);
  std::vector<double> x_t;
  for (std::size_t k = 0; k < n; ++k) {
    const auto x_g = clean(rng);
    x_t.resize(x_g.size());
    for (std::size_t j = 0; j < x_g.size(); ++j) x_t[j] = x_g[j] + sigma * rng.normal();
    const auto uu = u(x_t);
    const auto s = score(x_t, sigma);
    double acc = 0.0;
    for (std::size_t j = 0; j < x_t.size(); ++j) acc += uu[j] * s[j];
    lhs.add(acc);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto x_g = clean(rng);
    x_t.resize(x_g.size());
    for (std::size_t j = 0; j < x_g.size(); ++j) x_t[j] = x_g[j] + sigma * rng.normal();
    const auto uu = u(x_t);
    double acc = 0.0;
    for (std::size_t j = 0; j < x_t.size(); ++j) acc += uu[j] * (x_g[j] - x_t[j]) / (sigma * sigma);
    rhs.add(acc);
  }
  return compare(lhs.result(), rhs.result());
}

Theorem1Report check_theorem1(const oracle::GaussianWorld& world, std::span<const double> theta,
                              double sigma, std::size_t n, Rng& rng) {
  world.validate();
  if (theta.size() != world.dim) throw ShapeError("check_theorem1: theta dimension mismatch");
  const std::vector<double> th(theta.begin(), theta.end());
  const double shrink = 1.0 / (1.0 + sigma * sigma);

  // Exact score difference S_data(x_t) - grad ln p_theta(x_t) = (mu - theta) / (1 + sigma^2).
  const loss::VectorFn delta = [&](std::span<const double>) {
    std::vector<double> d(world.dim);
    for (std::size_t j = 0; j < world.dim; ++j) d[j] = (world.mean[j] - th[j]) * shrink;
    return d;
  };
  const loss::VectorFn phi = [&](std::span<const double> x) {
    std::vector<double> f(world.dim);
    for (std::size_t j = 0; j < world.dim; ++j) f[j] = world.mean[j] + (x[j] - world.mean[j]) * shrink;
    return f;
  };
  const loss::PointSampler generator = [&](Rng& r) {
    std::vector<double> x(world.dim);
    for (std::size_t j = 0; j < world.dim; ++j) x[j] = th[j] + r.normal();
    return x;
  };

  Theorem1Report out;
  const auto direct = loss::mesm_direct_estimate(delta, generator, sigma, n, rng);
  const auto projected = loss::mesm_projected_estimate(delta, phi, generator, sigma, n, rng);
  out.analytic = oracle::fisher_divergence_analytic(theta, sigma, world.mean);
  out.direct_z = z_of(direct.value(), out.analytic, direct.error());
  out.projected_z = z_of(projected.value(), out.analytic, projected.error());
  out.direct_vs_projected = compare(direct, projected);
  out.pass = out.direct_vs_projected.pass && out.direct_z <= 3.0 && out.projected_z <= 3.0;
  return out;
}

namespace {

void moments(const Tensor& x, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const std::size_t n = x.rows(), d = x.cols();
  mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean(static_cast<Eigen::Index>(j)) += x(i, j);
  }
  mean /= static_cast<double>(n);
  cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd r(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      r(static_cast<Eigen::Index>(j)) = x(i, j) - mean(static_cast<Eigen::Index>(j));
    }
    cov.noalias() += r * r.transpose();
  }
  cov /= static_cast<double>(n - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double gaussian_frechet(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw ShapeError("gaussian_frechet: dimension mismatch");
  const std::size_t d = a.cols();
  if (a.rows() < d + 1 || b.rows() < d + 1) {
    throw std::invalid_argument("gaussian_frechet needs at least dim + 1 samples per set");
  }
  Eigen::VectorXd mu_a, mu_b;
  Eigen::MatrixXd cov_a, cov_b;
  moments(a, mu_a, cov_a);
  moments(b, mu_b, cov_b);
  if (!cov_a.allFinite() || !cov_b.allFinite()) {
    throw NonFiniteError("gaussian_frechet: covariance is not finite");
  }
  const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
  const Eigen::MatrixXd inner = root_a * cov_b * root_a;
  const Eigen::MatrixXd sym = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const double tr_cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_cross;
  return std::max(value, 0.0);
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("wasserstein_1d needs equal sample counts");
  if (a.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += std::fabs(sa[i] - sb[i]);
  return s / static_cast<double>(sa.size());
}

TrajectoryFit trajectory_summary(std::span<const TrajectoryPoint> log,
                                 std::optional<double> window_images) {
  std::vector<double> xs, ys;
  for (const auto& p : log) {
    if (window_images && p.images > *window_images) continue;
    if (!(p.metric > 0.0)) throw std::domain_error("trajectory_summary: metric must be positive");
    if (!(p.images > 0.0)) throw std::domain_error("trajectory_summary: images must be positive");
    xs.push_back(std::log(p.images));
    ys.push_back(std::log(p.metric));
  }
  if (xs.size() < 4) throw std::invalid_argument("trajectory_summary needs at least 4 rows");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("trajectory_summary: images are all equal");
  TrajectoryFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = xs.size();
  return fit;
}

}  // namespace sid::eval
