#include <gtest/gtest.h>

#include <cmath>

#include "sid/diffusion.hpp"

namespace sid::diffusion {
namespace {

// Reference values from 128-bit arithmetic for the default schedule.
TEST(Schedule, SigmaMatchesHighPrecisionReference) {
  const NoiseSchedule s;
  const std::pair<double, double> cases[] = {
      {0.1, 0.01672075323499392150263894},  {0.25, 0.1697527562687640281083078},
      {0.5, 2.515218976147158578827532},    {0.8, 24.4083417865801100873009},
      {0.9, 45.31373407522659742065014},
  };
  for (const auto& [t, sigma] : cases) {
    EXPECT_NEAR(sigma_at(s, t), sigma, 1e-12 * sigma) << "t = " << t;
  }
}

TEST(Schedule, EndpointsAndMonotonicity) {
  const NoiseSchedule s;
  EXPECT_NEAR(sigma_at(s, 0.0), 0.002, 1e-15);
  EXPECT_NEAR(sigma_at(s, 1.0), 80.0, 1e-12);
  double prev = sigma_at(s, 0.0);
  for (int i = 1; i <= 100; ++i) {
    const double cur = sigma_at(s, i / 100.0);
    EXPECT_GT(cur, prev);
    prev = cur;
  }
}

TEST(Schedule, DomainAndValidation) {
  const NoiseSchedule s;
  EXPECT_THROW(sigma_at(s, -0.01), std::domain_error);
  EXPECT_THROW(sigma_at(s, 1.01), std::domain_error);
  EXPECT_NO_THROW(s.validate());
  NoiseSchedule bad = s;
  bad.sigma_min = 100.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.rho = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.t_max = 1001;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TimeDraws, ThetaTimesAreUniformUpToTmax) {
  const NoiseSchedule s;
  Rng rng(4);
  double sum = 0.0, hi = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const TimeDraw d = sample_theta_time(s, rng);
    EXPECT_GE(d.t, 0.0);
    EXPECT_LE(d.t, 0.8);
    EXPECT_DOUBLE_EQ(d.sigma, sigma_at(s, d.t));
    sum += d.t;
    hi = std::max(hi, d.t);
  }
  EXPECT_NEAR(sum / n, 0.4, 0.003);
  EXPECT_GT(hi, 0.79);
}

TEST(TimeDraws, PsiSigmaRejectsBadStd) {
  Rng rng(1);
  EXPECT_THROW(sample_psi_sigma(rng, -1.2, 0.0), std::invalid_argument);
  EXPECT_GT(sample_psi_sigma(rng), 0.0);
}

TEST(Perturb, AddsScaledNoise) {
  const Tensor x = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor eps = Tensor::from_rows({{1, -1}, {0, 2}});
  const DiffusionSample d = perturb(x, 0.5, eps);
  EXPECT_EQ(d.x_t, Tensor::from_rows({{1.5, 1.5}, {3, 5}}));
  EXPECT_EQ(d.sigma, 0.5);
  EXPECT_THROW(perturb(x, -1.0, eps), std::invalid_argument);
  EXPECT_THROW(perturb(x, 1.0, Tensor(1, 2)), ShapeError);
  Rng a(3), b(3);
  EXPECT_EQ(perturb(x, 1.0, a).x_t, perturb(x, 1.0, b).x_t);
}

TEST(Perturb, ConditionalScore) {
  const Tensor x_t = Tensor::row({1.0, 3.0});
  const Tensor ref = Tensor::row({0.0, 1.0});
  EXPECT_EQ(conditional_score(x_t, ref, 2.0), Tensor::row({-0.25, -0.5}));
  EXPECT_THROW(conditional_score(x_t, ref, 0.0), std::domain_error);
}

TEST(Preconditioning, Coefficients) {
  const double sd = 0.5;
  for (double s : {0.002, 0.3, 1.0, 80.0}) {
    const Preconditioning p = precondition_coeffs(s, sd);
    const double r = std::sqrt(s * s + sd * sd);
    EXPECT_NEAR(p.c_skip, sd * sd / (r * r), 1e-15);
    EXPECT_NEAR(p.c_out, s * sd / r, 1e-15 * (1 + p.c_out));
    EXPECT_NEAR(p.c_in, 1.0 / r, 1e-15 * p.c_in);
    EXPECT_NEAR(p.c_noise, std::log(s) / 4.0, 1e-15);
    // Unit-variance training target.
    EXPECT_NEAR(p.c_skip + (p.c_out / sd) * (p.c_out / sd), 1.0, 1e-12);
  }
}

TEST(Heun, GridShape) {
  const NoiseSchedule s;
  EXPECT_EQ(heun_sigma_grid(s, 1), (std::vector<double>{80.0, 0.0}));
  const auto g = heun_sigma_grid(s, 35);
  ASSERT_EQ(g.size(), 36u);
  EXPECT_NEAR(g.front(), 80.0, 1e-12);
  EXPECT_NEAR(g[34], 0.002, 1e-15);
  EXPECT_EQ(g.back(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i], g[i - 1]);
  EXPECT_THROW(heun_sigma_grid(s, 0), std::invalid_argument);
}

// For data N(0,1) the probability-flow map is x -> x sqrt(1+s'^2)/sqrt(1+s^2),
// so a start at sigma_max lands at x_T / sqrt(1 + sigma_max^2). The solver is
// second order: the gap shrinks with the step count.
TEST(Heun, ConvergesToExactFlowOnGaussianData) {
  const NoiseSchedule s;
  const DenoiseFn denoise = [](const Tensor& x, double sigma) {
    Tensor out = x;
    for (double& v : out.data()) v /= 1.0 + sigma * sigma;
    return out;
  };
  const double exact_gain = 80.0 / std::sqrt(1.0 + 80.0 * 80.0);
  const std::pair<int, double> cases[] = {{35, 0.02}, {400, 2e-4}};
  for (const auto& [steps, tol] : cases) {
    Rng rng(9), start(9);
    const Tensor x = heun_sample(denoise, s, steps, 64, 1, rng);
    const Tensor x_init = start.normal(64, 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(x[i] / (x_init[i] * exact_gain), 1.0, tol) << steps << " steps";
    }
  }
}

TEST(Heun, NonFiniteStateThrows) {
  const DenoiseFn blow_up = [](const Tensor& x, double) {
    Tensor out = x;
    for (double& v : out.data()) v = 1e300 * (v + 1.0);
    return out;
  };
  Rng rng(1);
  EXPECT_THROW(heun_sample(blow_up, NoiseSchedule{}, 5, 4, 1, rng), NonFiniteError);
}

}  // namespace
}  // namespace sid::diffusion
