#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lorentz/grid.hpp"

using namespace lorentz;

namespace {
constexpr double kPi = std::numbers::pi;

GridArray sample(const GridSpec& g, auto f) {
  GridArray a(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) a(i, j) = f(g.node(0, i), g.node(1, j));
  return a;
}
}  // namespace

TEST(Grid, NodeConventions) {
  GridSpec g{{0, 1, -1, 1, true, false}, 4, 5};
  EXPECT_DOUBLE_EQ(g.node(0, 3), 0.75);  // periodic: right endpoint excluded
  EXPECT_DOUBLE_EQ(g.node(1, 4), 1.0);   // non-periodic: both endpoints
  EXPECT_TRUE(g.domain.wrap({1.25, 0.3}).isApprox(Vec2(0.25, 0.3)));
  EXPECT_TRUE(g.domain.wrap({-0.25, 0.3}).isApprox(Vec2(0.75, 0.3)));
}

TEST(Grid, SpectralDerivativesOfTrigPolynomialAreExact) {
  GridSpec g{{0, 1, 0, 2, true, true}, 32, 24};
  auto f = sample(g, [](double x, double y) { return std::sin(2 * kPi * 3 * x) * std::cos(kPi * 2 * y); });
  auto fx = differentiate(g, f, 0, 1);
  auto fyy = differentiate(g, f, 1, 2);
  auto fx_ref = sample(g, [](double x, double y) { return 6 * kPi * std::cos(6 * kPi * x) * std::cos(2 * kPi * y); });
  auto fyy_ref = sample(g, [](double x, double y) {
    return -4 * kPi * kPi * std::sin(6 * kPi * x) * std::cos(2 * kPi * y);
  });
  EXPECT_LT((fx - fx_ref).abs().maxCoeff(), 1e-11);
  EXPECT_LT((fyy - fyy_ref).abs().maxCoeff(), 1e-10);
}

TEST(Grid, FiniteDifferencesAreSixthOrder) {
  auto err = [](int n) {
    GridSpec g{{0, 1, 0, 1, false, false}, n, 8};
    auto f = sample(g, [](double x, double) { return std::exp(std::sin(3 * x)); });
    auto d = differentiate(g, f, 0, 1);
    auto ref = sample(g, [](double x, double) { return 3 * std::cos(3 * x) * std::exp(std::sin(3 * x)); });
    return (d - ref).abs().maxCoeff();
  };
  const double e1 = err(41), e2 = err(81);
  EXPECT_LT(e2, 1e-7);
  EXPECT_GT(std::log2(e1 / e2), 5.5);
}

TEST(Grid, FornbergReproducesClassicStencil) {
  auto w = fornberg_weights(0, {-1, 0, 1}, 2);
  EXPECT_NEAR(w[1][0], -0.5, 1e-15);
  EXPECT_NEAR(w[1][2], 0.5, 1e-15);
  EXPECT_NEAR(w[2][0], 1.0, 1e-15);
  EXPECT_NEAR(w[2][1], -2.0, 1e-15);
}

TEST(Grid, TrapezoidIntegration) {
  GridSpec per{{0, 1, 0, 1, true, true}, 16, 16};
  auto f = sample(per, [](double x, double y) { return 1 + std::sin(2 * kPi * x) * std::sin(2 * kPi * y); });
  EXPECT_NEAR(integrate(per, f), 1.0, 1e-14);
  GridSpec open{{0, 2, 0, 1, false, false}, 201, 3};
  auto lin = sample(open, [](double x, double) { return x; });
  EXPECT_NEAR(integrate(open, lin), 2.0, 1e-13);
}

TEST(Grid, InterpolationIsHighOrder) {
  GridSpec g{{0, 1, 0, 1, true, false}, 64, 64};
  auto fun = [](double x, double y) { return std::sin(2 * kPi * x) * std::exp(y); };
  auto f = sample(g, fun);
  for (Vec2 p : {Vec2(0.123, 0.456), Vec2(0.999, 0.01), Vec2(0.5, 0.999)})
    EXPECT_NEAR(GridInterpolator(g, p)(f), fun(p.x(), p.y()), 1e-9);
}
