#include <gtest/gtest.h>

#include <cmath>

#include "sid/oracle.hpp"

namespace sid::oracle {
namespace {

TEST(Oracle, AnalyticDenoiserAndScore) {
  const GaussianWorld w{2, {1.0, -1.0}};
  const Tensor x = Tensor::from_rows({{3.0, 1.0}});
  EXPECT_EQ(analytic_denoiser(w, x, 1.0), Tensor::row({2.0, 0.0}));
  EXPECT_EQ(analytic_score(w, x, 1.0), Tensor::row({-1.0, -1.0}));
  EXPECT_THROW(analytic_score(w, Tensor(1, 3), 1.0), ShapeError);
  EXPECT_THROW(analytic_score(w, x, 0.0), std::domain_error);
  EXPECT_THROW((GaussianWorld{2, {1.0}}).validate(), std::invalid_argument);
}

// Tweedie: denoiser = x + sigma^2 score for the closed forms.
TEST(Oracle, DenoiserAndScoreSatisfyTweedie) {
  const GaussianWorld w{1, {0.3}};
  const Tensor x = Tensor::column(std::vector<double>{-2.0, 0.0, 1.5});
  for (double s : {0.1, 1.0, 7.0}) {
    const Tensor d = analytic_denoiser(w, x, s), sc = analytic_score(w, x, s);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(d[i], x[i] + s * s * sc[i], 1e-13);
  }
}

TEST(Oracle, ToyClosedForms) {
  const ToyState s{0.5, -0.25, 2.0};
  EXPECT_DOUBLE_EQ(toy_delta(s), 0.25 / 5.0);
  EXPECT_DOUBLE_EQ(toy_delta_exact(s), -0.5 / 5.0);
  const ToyLosses l = toy_losses(s);
  EXPECT_DOUBLE_EQ(l.l_theta, 0.25 / 25.0);
  EXPECT_DOUBLE_EQ(l.l1_hat, 0.0625 / 25.0);
  EXPECT_DOUBLE_EQ(toy_l2_value(s, 1.0, 0.5), -0.25 / 25.0 * (1.0 - 0.25));
  EXPECT_DOUBLE_EQ(toy_l2_gradient(s, 0.3, 2.5), -0.25 / 25.0);
}

TEST(Oracle, FisherDivergence) {
  const std::vector<double> theta = {1.0, 2.0};
  EXPECT_DOUBLE_EQ(fisher_divergence_analytic(theta, 1.0), 5.0 / 4.0);
  const std::vector<double> mu = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(fisher_divergence_analytic(theta, 0.0, mu), 4.0);
  EXPECT_THROW(fisher_divergence_analytic(theta, 1.0, std::vector<double>{1.0}), ShapeError);
}

TEST(Oracle, MeanAccumulatorMatchesDirectFormulas) {
  MeanAccumulator acc(2);
  const double rows[4][2] = {{1, 10}, {2, 20}, {3, 30}, {6, 0}};
  for (const auto& r : rows) acc.add(r);
  const MCEstimate e = acc.result();
  EXPECT_EQ(e.n, 4u);
  EXPECT_DOUBLE_EQ(e.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(e.mean[1], 15.0);
  // Sample variances 14/3 and 500/3, standard error sqrt(var / n).
  EXPECT_NEAR(e.std_error[0], std::sqrt(14.0 / 3.0 / 4.0), 1e-14);
  EXPECT_NEAR(e.std_error[1], std::sqrt(500.0 / 3.0 / 4.0), 1e-13);
  MeanAccumulator one;
  one.add(1.0);
  EXPECT_THROW(one.result(), std::logic_error);
}

TEST(Oracle, McEstimateOfKnownMoment) {
  Rng rng(5);
  const MCEstimate e = mc_estimate([](Rng& r) { return std::vector<double>{r.normal()}; },
                                   [](std::span<const double> x) {
                                     return std::vector<double>{x[0] * x[0]};
                                   },
                                   200000, rng);
  EXPECT_NEAR(e.value(), 1.0, 4.0 * e.error());
  EXPECT_NEAR(e.error(), std::sqrt(2.0 / 200000.0), 1e-4);
}

TEST(Oracle, GraphModelsMatchClosedForms) {
  const std::vector<double> sigma = {0.5, 3.0};
  const Tensor x = Tensor::from_rows({{1.0}, {-2.0}});
  const Tensor phi = nn::evaluate(GaussianDenoiser(GaussianWorld::centered(1)), x, sigma);
  const Tensor psi = nn::evaluate(ToyFakeDenoiser({0.4}), x, sigma);
  for (std::size_t i = 0; i < 2; ++i) {
    const double s2 = sigma[i] * sigma[i];
    EXPECT_NEAR(phi[i], x[i] / (1 + s2), 1e-15);
    EXPECT_NEAR(psi[i], x[i] / (1 + s2) + 0.4 * s2 / (1 + s2), 1e-15);
  }
  EXPECT_EQ(nn::evaluate(ShiftGenerator({2.0}), x), Tensor::from_rows({{3.0}, {0.0}}));
}

}  // namespace
}  // namespace sid::oracle
