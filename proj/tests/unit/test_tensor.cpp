#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid {
namespace {

TEST(Tensor, ConstructorsRejectNonFinite) {
  EXPECT_THROW(Tensor(1, 2, std::vector<double>{1.0, std::nan("")}), NonFiniteError);
  EXPECT_THROW(Tensor(2, 2, std::numeric_limits<double>::infinity()), NonFiniteError);
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1.0}), ShapeError);
}

TEST(Tensor, Factories) {
  const Tensor r = Tensor::row({1.0, 2.0, 3.0});
  EXPECT_EQ(r.rows(), 1u);
  EXPECT_EQ(r.cols(), 3u);
  const Tensor c = Tensor::column(r.data());
  EXPECT_EQ(c.rows(), 3u);
  EXPECT_EQ(c(2, 0), 3.0);
  const Tensor i = Tensor::identity(3);
  EXPECT_EQ(i(1, 1), 1.0);
  EXPECT_EQ(i(1, 2), 0.0);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.5).item(), 4.5);
  EXPECT_THROW(r.item(), ShapeError);
}

TEST(Tensor, SliceAndStack) {
  const Tensor m = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const Tensor s = m.slice_rows(1, 2);
  EXPECT_EQ(s, Tensor::from_rows({{3, 4}, {5, 6}}));
  const std::vector<Tensor> parts = {m.slice_rows(0, 1), s};
  EXPECT_EQ(vstack(parts), m);
  EXPECT_THROW(m.slice_rows(2, 2), ShapeError);
}

TEST(Tensor, CheckFiniteNamesTheTensor) {
  Tensor t(1, 1);
  t[0] = std::nan("");
  try {
    t.check_finite("weights");
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_NE(Rng(42).normal(), c.normal());
  EXPECT_NE(Rng(42, 1).normal(), Rng(42, 2).normal());
}

TEST(Rng, StateRoundTripIncludesCachedNormal) {
  Rng a(7);
  a.normal();  // leaves a cached spare in the normal distribution
  Rng b(0);
  b.restore(a.state());
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.uniform(), b.uniform());
  }
  EXPECT_THROW(b.restore("garbage"), std::runtime_error);
}

TEST(Rng, MomentsAreStandard) {
  Rng rng(3);
  double s = 0.0, s2 = 0.0, u = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    u += rng.uniform(2.0, 4.0);
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(u / n, 3.0, 0.01);
}

}  // namespace
}  // namespace sid
