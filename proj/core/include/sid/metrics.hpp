#pragma once

// Identity verification harnesses and distribution distances.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sid/oracle.hpp"
#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::eval {

/// Two Monte-Carlo estimates of the same quantity. Passes when every
/// component differs by at most 3 combined standard errors.
struct IdentityReport {
  oracle::MCEstimate lhs;
  oracle::MCEstimate rhs;
  double z_score = 0.0;  ///< largest |lhs - rhs| / sqrt(se_lhs^2 + se_rhs^2) over components
  bool pass = false;
};

IdentityReport compare(oracle::MCEstimate lhs, oracle::MCEstimate rhs, double n_sigma = 3.0);

using PointSampler = std::function<std::vector<double>(Rng&)>;
using ScoreFn = std::function<std::vector<double>(std::span<const double> x_t, double sigma)>;

struct TweedieProbe {
  std::vector<double> x_t;
  IdentityReport report;
  double ess = 0.0;
  bool low_ess = false;  ///< effective sample size below 10
};

struct TweedieReport {
  std::vector<TweedieProbe> probes;
  bool pass = false;
};

/// Probe points drawn from the diffused distribution x0 + sigma eps.
std::vector<std::vector<double>> draw_probes(const PointSampler& clean, double sigma,
                                             std::size_t count, Rng& rng);

/// At each probe x_t: LHS = self-normalized importance estimate of E[x0 | x_t]
/// using n draws x0 ~ clean with weights q(x_t | x0); RHS = x_t + sigma^2 score(x_t).
/// Works for real data (teacher score) and generator samples (fake score) alike.
TweedieReport check_tweedie(const PointSampler& clean, const ScoreFn& score, double sigma,
                            std::span<const std::vector<double>> probes, std::size_t n,
                            Rng& rng);

using ProjectionFn = std::function<std::vector<double>(std::span<const double>)>;

/// LHS = E_{x_t ~ p(x_t)}[u(x_t)^T score(x_t)]; RHS = E_{x_g, x_t}[u(x_t)^T (x_g - x_t) / sigma^2],
/// each from its own n draws.
IdentityReport check_projection_identity(const PointSampler& clean, const ProjectionFn& u,
                                         const ScoreFn& score, double sigma, std::size_t n,
                                         Rng& rng);

struct Theorem1Report {
  IdentityReport direct_vs_projected;
  double analytic = 0.0;
  double direct_z = 0.0;     ///< |direct - analytic| / se_direct (0 when exact)
  double projected_z = 0.0;  ///< |projected - analytic| / se_projected
  bool pass = false;
};

/// Gaussian world with data N(mu, I) and generator N(theta, I): compares the
/// direct MESM Monte Carlo, the projected form and the closed form.
Theorem1Report check_theorem1(const oracle::GaussianWorld& world, std::span<const double> theta,
                              double sigma, std::size_t n, Rng& rng);

/// Squared 2-Wasserstein distance between Gaussians fitted to two sample sets
/// (rows are samples).
double gaussian_frechet(const Tensor& a, const Tensor& b);

/// W1 between equal-size 1D samples: mean |a_(i) - b_(i)| of order statistics.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

struct TrajectoryPoint {
  double images = 0.0;
  double metric = 0.0;
};

struct TrajectoryFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of ln(metric) on ln(images) over rows with
/// images <= window_images (all rows when unset). Needs >= 4 rows in the window.
TrajectoryFit trajectory_summary(std::span<const TrajectoryPoint> log,
                                 std::optional<double> window_images = std::nullopt);

}  // namespace sid::eval
