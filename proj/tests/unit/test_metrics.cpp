#include <gtest/gtest.h>

#include <cmath>

#include "sid/datasets.hpp"
#include "sid/metrics.hpp"

namespace sid::eval {
namespace {

oracle::MCEstimate estimate(double mean, double se) { return {{mean}, {se}, 100}; }

TEST(Compare, ZScore) {
  const IdentityReport r = compare(estimate(1.0, 0.3), estimate(2.0, 0.4));
  EXPECT_DOUBLE_EQ(r.z_score, 2.0);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(compare(estimate(1.0, 0.3), estimate(3.0, 0.4)).pass);
  EXPECT_TRUE(compare(estimate(1.0, 0.0), estimate(1.0, 0.0)).pass);
  EXPECT_FALSE(compare(estimate(1.0, 0.0), estimate(1.1, 0.0)).pass);
}

TEST(Frechet, ZeroForIdenticalSamplesAndSymmetric) {
  Rng rng(1);
  const Tensor a = rng.normal(500, 2);
  Tensor b = rng.normal(800, 2);
  for (std::size_t i = 0; i < b.rows(); ++i) b(i, 0) = 0.5 * b(i, 0) + 1.0;
  EXPECT_NEAR(gaussian_frechet(a, a), 0.0, 1e-10);
  EXPECT_NEAR(gaussian_frechet(a, b), gaussian_frechet(b, a), 1e-10);
  EXPECT_GT(gaussian_frechet(a, b), 0.5);
}

// N(0, I) vs N(e1, I): squared mean gap 1, identical covariances.
TEST(Frechet, UnitShiftGivesOne) {
  Rng rng(2);
  const Tensor a = rng.normal(200000, 2);
  Tensor b = rng.normal(200000, 2);
  for (std::size_t i = 0; i < b.rows(); ++i) b(i, 0) += 1.0;
  EXPECT_NEAR(gaussian_frechet(a, b), 1.0, 0.02);
}

// Closed form for 1D Gaussians: (m1 - m2)^2 + (s1 - s2)^2.
TEST(Frechet, ScaleGapMatchesClosedForm) {
  Rng rng(3);
  const Tensor a = rng.normal(200000, 1);
  Tensor b = rng.normal(200000, 1);
  for (double& v : b.data()) v *= 3.0;
  EXPECT_NEAR(gaussian_frechet(a, b), 4.0, 0.05);
  EXPECT_THROW(gaussian_frechet(Tensor(2, 2), Tensor(5, 2)), std::invalid_argument);
  EXPECT_THROW(gaussian_frechet(Tensor(5, 2), Tensor(5, 3)), ShapeError);
}

TEST(Wasserstein1d, ShiftAndExactCases) {
  const std::vector<double> a = {3.0, 1.0, 2.0};
  const std::vector<double> b = {2.0, 4.0, 3.0};
  EXPECT_DOUBLE_EQ(wasserstein_1d(a, b), 1.0);
  Rng rng(4);
  std::vector<double> x(100000), y(100000);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal() + 2.0;
  EXPECT_NEAR(wasserstein_1d(x, y), 2.0, 0.02);
  EXPECT_THROW(wasserstein_1d(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Trajectory, RecoversPowerLaw) {
  std::vector<TrajectoryPoint> log;
  for (int k = 1; k <= 8; ++k) log.push_back({std::pow(4.0, k), 3.0 * std::pow(2.0, -k)});
  const TrajectoryFit fit = trajectory_summary(log);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 3.0, 1e-10);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  EXPECT_EQ(fit.points, 8u);
  const TrajectoryFit early = trajectory_summary(log, 4.0 * 4.0 * 4.0 * 4.0);
  EXPECT_EQ(early.points, 4u);
  EXPECT_THROW(trajectory_summary(log, 20.0), std::invalid_argument);
  log[2].metric = 0.0;
  EXPECT_THROW(trajectory_summary(log), std::domain_error);
}

PointSampler normal_sampler(double mean) {
  return [mean](Rng& r) { return std::vector<double>{mean + r.normal()}; };
}

ScoreFn gaussian_score(double mean) {
  return [mean](std::span<const double> x, double s) {
    return std::vector<double>{-(x[0] - mean) / (1.0 + s * s)};
  };
}

TEST(Tweedie, PassesForTrueScoreAndFailsForWrongOne) {
  Rng rng(5);
  const std::vector<std::vector<double>> probes = {{1.0}, {-0.5}};
  const TweedieReport good = check_tweedie(normal_sampler(0.0), gaussian_score(0.0), 1.0,
                                           probes, 200000, rng);
  EXPECT_TRUE(good.pass);
  for (const auto& p : good.probes) EXPECT_FALSE(p.low_ess);
  const TweedieReport bad = check_tweedie(normal_sampler(0.0), gaussian_score(0.5), 1.0, probes,
                                          200000, rng);
  EXPECT_FALSE(bad.pass);
  EXPECT_THROW(check_tweedie(normal_sampler(0.0), gaussian_score(0.0), 1.0, probes, 10, rng),
               std::invalid_argument);
}

TEST(Tweedie, MixtureScore) {
  const data::GaussianMixture ring = data::ring8();
  Rng rng(6);
  const PointSampler clean = [&](Rng& r) { return ring.sample_point(r); };
  const ScoreFn score = [&](std::span<const double> x, double s) {
    return ring.diffused_score(x, s);
  };
  const auto probes = draw_probes(clean, 0.5, 4, rng);
  ASSERT_EQ(probes.size(), 4u);
  EXPECT_TRUE(check_tweedie(clean, score, 0.5, probes, 200000, rng).pass);
}

TEST(Projection, ZeroTestFunctionIsExact) {
  Rng rng(7);
  const ProjectionFn zero = [](std::span<const double>) { return std::vector<double>{0.0}; };
  const IdentityReport r =
      check_projection_identity(normal_sampler(0.0), zero, gaussian_score(0.0), 1.0, 1000, rng);
  EXPECT_EQ(r.lhs.value(), 0.0);
  EXPECT_EQ(r.rhs.value(), 0.0);
  EXPECT_EQ(r.lhs.error(), 0.0);
  EXPECT_TRUE(r.pass);
}

// u(x) = x with the true score: both sides equal -1 by Stein's identity.
TEST(Projection, LinearTestFunction) {
  Rng rng(8);
  const ProjectionFn id = [](std::span<const double> x) { return std::vector<double>{x[0]}; };
  const IdentityReport r =
      check_projection_identity(normal_sampler(0.0), id, gaussian_score(0.0), 1.0, 400000, rng);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs.value(), -1.0, 5.0 * r.lhs.error());
  EXPECT_NEAR(r.rhs.value(), -1.0, 5.0 * r.rhs.error());
}

TEST(Theorem1, MatchesClosedForm) {
  Rng rng(9);
  const oracle::GaussianWorld world{2, {0.5, -0.5}};
  const std::vector<double> theta = {1.0, 0.0};
  const Theorem1Report r = check_theorem1(world, theta, 1.5, 200000, rng);
  EXPECT_TRUE(r.pass);
  // ||theta - mu||^2 / (1 + s^2)^2 = 0.5 / 3.25^2
  EXPECT_NEAR(r.analytic, 0.5 / (3.25 * 3.25), 1e-15);
}

TEST(Theorem1, VanishesWhenGeneratorMatchesData) {
  Rng rng(10);
  const oracle::GaussianWorld world = oracle::GaussianWorld::centered(1);
  const std::vector<double> theta = {0.0};
  const Theorem1Report r = check_theorem1(world, theta, 1.0, 10000, rng);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_TRUE(r.pass);
}

}  // namespace
}  // namespace sid::eval
