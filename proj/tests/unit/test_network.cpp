#include <gtest/gtest.h>

#include <cmath>

#include "sid/network.hpp"

namespace sid::nn {
namespace {

NetworkConfig small(std::size_t dim = 2) {
  NetworkConfig c;
  c.data_dim = dim;
  c.hidden_width = 6;
  c.depth = 2;
  c.time_embed_dim = 4;
  return c;
}

TEST(Network, LayoutIsContiguous) {
  const NetworkConfig c = small();
  const auto layers = layout_for(c);
  ASSERT_EQ(layers.size(), 3u);
  EXPECT_EQ(layers[0], (LayerSlice{6, 6, 0}));
  EXPECT_EQ(layers[1], (LayerSlice{6, 6, 42}));
  EXPECT_EQ(layers[2], (LayerSlice{6, 2, 84}));
  EXPECT_EQ(parameter_count(c), 98u);
}

TEST(Network, ConfigValidation) {
  NetworkConfig c = small();
  c.depth = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small();
  c.sigma_data = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(NetworkParams(small(), std::vector<double>(5)), std::invalid_argument);
}

TEST(Network, WeightAndBiasViews) {
  Rng rng(1);
  const NetworkParams p = NetworkParams::random(small(), rng);
  const Tensor w = p.weight(2);
  EXPECT_EQ(w.rows(), 6u);
  EXPECT_EQ(w.cols(), 2u);
  EXPECT_EQ(w(1, 0), p.values()[84 + 2]);
  EXPECT_EQ(p.bias(2), Tensor(1, 2, 0.0));
}

// With all weights zero the MLP branch vanishes and the output is c_skip x.
TEST(Network, ZeroNetworkIsSkipConnection) {
  const NetworkParams p = NetworkParams::zeros(small());
  const Tensor x = Tensor::from_rows({{1.0, -2.0}, {0.5, 3.0}});
  const double sigmas[] = {0.3, 4.0};
  const Tensor out = denoise(p, x, sigmas);
  for (std::size_t i = 0; i < 2; ++i) {
    const double c_skip = 0.25 / (sigmas[i] * sigmas[i] + 0.25);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out(i, j), c_skip * x(i, j), 1e-15);
  }
}

// Output bias b adds c_out b to every row.
TEST(Network, OutputBiasScalesWithCout) {
  NetworkParams p = NetworkParams::zeros(small());
  p.values()[p.layers().back().bias_offset()] = 1.0;
  const Tensor out = denoise(p, Tensor(1, 2), 2.0);
  EXPECT_NEAR(out(0, 0), 2.0 * 0.5 / std::sqrt(4.25), 1e-15);
  EXPECT_EQ(out(0, 1), 0.0);
}

TEST(Network, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(2);
  const NetworkParams p = NetworkParams::random(small(), rng);
  const Tensor x = rng.normal(5, 2);
  const std::vector<double> sigma = {0.01, 0.2, 1.0, 5.0, 60.0};
  ad::Graph g;
  const ad::Var xv = g.constant(x);
  const Attached a = MlpDenoiser(p).attach(g, xv, sigma, Role::Trainable);
  ASSERT_EQ(a.leaves.size(), 6u);
  const ad::Var root = g.squared_norm(a.output);
  EXPECT_LT(ad::grad_check(g, root, a.leaves, 1e-5).max_rel_error, 1e-6);
  const auto flat = flatten_gradient(g.backward(root), a);
  EXPECT_EQ(flat.size(), p.size());
}

TEST(Network, FrozenAttachCreatesNoLeaves) {
  Rng rng(2);
  const NetworkParams p = NetworkParams::random(small(), rng);
  ad::Graph g;
  const std::vector<double> sigma = {1.0};
  const Attached a = MlpDenoiser(p).attach(g, g.constant(Tensor(1, 2)), sigma, Role::Frozen);
  EXPECT_TRUE(a.leaves.empty());
}

TEST(Network, InputPullbackMatchesFiniteDifferences) {
  Rng rng(3);
  const NetworkParams p = NetworkParams::random(small(), rng);
  const Tensor x = rng.normal(3, 2);
  const Tensor u = rng.normal(3, 2);
  const std::vector<double> sigma = {0.1, 1.0, 10.0};
  const Tensor pull = input_gradient_pullback(p, x, sigma, u);
  const double h = 1e-6;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Tensor up = x, down = x;
    up[k] += h;
    down[k] -= h;
    const Tensor fu = denoise(p, up, sigma), fd = denoise(p, down, sigma);
    double num = 0.0;
    for (std::size_t m = 0; m < u.size(); ++m) num += u[m] * (fu[m] - fd[m]) / (2 * h);
    EXPECT_NEAR(pull[k], num, 1e-7 * (1 + std::abs(num)));
  }
}

TEST(Network, GeneratorIsDenoiserAtSigmaInit) {
  Rng rng(4);
  const NetworkParams p = NetworkParams::random(small(), rng);
  const Tensor z = rng.normal(7, 2);
  Tensor scaled = z;
  for (double& v : scaled.data()) v *= 2.5;
  EXPECT_EQ(generate(p, z, 2.5), denoise(p, scaled, 2.5));
  EXPECT_EQ(evaluate(MlpGenerator(p, 2.5), z), generate(p, z, 2.5));
}

TEST(Network, ScoreIsScaledResidual) {
  Rng rng(5);
  const NetworkParams p = NetworkParams::random(small(), rng);
  const Tensor x = rng.normal(2, 2);
  const Tensor d = denoise(p, x, 0.7), s = score(p, x, 0.7);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(s[k], (d[k] - x[k]) / 0.49, 1e-13);
}

TEST(Network, RejectsBadInputs) {
  Rng rng(6);
  const NetworkParams p = NetworkParams::random(small(), rng);
  EXPECT_THROW(denoise(p, Tensor(2, 3), 1.0), ShapeError);
  EXPECT_THROW(denoise(p, Tensor(2, 2), 0.0), std::domain_error);
  const std::vector<double> one = {1.0};
  EXPECT_THROW(denoise(p, Tensor(2, 2), one), ShapeError);
}

TEST(Network, InitIsSeedDeterministic) {
  Rng a(9), b(9), c(10);
  EXPECT_EQ(NetworkParams::random(small(), a), NetworkParams::random(small(), b));
  Rng d(9);
  EXPECT_FALSE(NetworkParams::random(small(), d) == NetworkParams::random(small(), c));
}

TEST(Network, TimeEmbeddingShape) {
  const std::vector<double> s = {1.0, 2.0};
  const Tensor e = time_embedding(s, 5);
  EXPECT_EQ(e.cols(), 5u);
  // c_noise = 0 at sigma = 1: sines vanish, cosines are one.
  EXPECT_EQ(e(0, 0), 0.0);
  EXPECT_EQ(e(0, 1), 1.0);
}

}  // namespace
}  // namespace sid::nn
