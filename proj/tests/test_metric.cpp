#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lorentz/diffeo.hpp"
#include "lorentz/metric.hpp"
#include "oracles.hpp"

using namespace lorentz;

namespace {
constexpr double kPi = std::numbers::pi;

Expr P(const char* s) { return Expr::parse(s); }

MetricPatch polynomial_h(int n = 65) {
  return MetricPatch::from_expressions({0, 2, -1, 2, false, false}, {P("2*x*y^2"), P("0.5"), P("0")}, n, n);
}

double oracle_curvature(const MetricPatch& m, double x, double y) {
  const auto& e = m.expressions();
  return -oracle::brioschi(e.E.jet(x, y), e.F.jet(x, y), e.G.jet(x, y));
}

MetricPatch random_torus_metric(std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  std::uniform_int_distribution<int> K(1, 2);
  auto term = [&]() {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g*sin(2*pi*(%d*x + %d*y) + %.17g)", U(rng), K(rng), K(rng) - 1, 6 * U(rng));
    return std::string(buf);
  };
  const Expr E = P((term() + " + " + term()).c_str());
  const Expr F = P(("1 + " + term()).c_str());
  const Expr G = P((term() + " + " + term()).c_str());
  return MetricPatch::from_expressions(Domain::unit_torus(), {E, F, G}, 128, 128);
}
}  // namespace

TEST(EvalMetric, Examples) {
  auto flat = MetricPatch::from_expressions(Domain::unit_torus(), {P("0"), P("0.5"), P("0")});
  Mat2 want;
  want << 0, 0.5, 0.5, 0;
  EXPECT_TRUE(eval_metric(flat, {0.3, 0.9}).isApprox(want));

  want << 2, 0.5, 0.5, 0;
  EXPECT_TRUE(eval_metric(polynomial_h(), {1, 1}).isApprox(want));
  EXPECT_LT((eval_metric(polynomial_h().sampled(), {1, 1}) - want).cwiseAbs().maxCoeff(), 1e-10);
  // off-node grid evaluation also reproduces the polynomial
  want << 2 * 0.93 * 1.17 * 1.17, 0.5, 0.5, 0;
  EXPECT_LT((eval_metric(polynomial_h().sampled(), {0.93, 1.17}) - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EvalMetric, Errors) {
  auto h = polynomial_h();
  EXPECT_THROW(eval_metric(h, {2.5, 0}), DomainError);
  auto riem = MetricPatch::from_expressions(Domain::unit_torus(), {P("1"), P("0"), P("1")});
  EXPECT_THROW(eval_metric(riem, {0.2, 0.2}), SignatureError);
  EXPECT_THROW(MetricPatch::from_expressions(Domain::unit_torus(), {P("x"), P("1"), P("0")}), PreconditionError);
}

TEST(Christoffel, ConstantMetricHasNone) {
  auto m = MetricPatch::from_expressions(Domain::unit_torus(), {P("1"), P("2"), P("-1")});
  const auto c = christoffel(m, {0.4, 0.1});
  EXPECT_EQ(c.gamma[0].norm() + c.gamma[1].norm(), 0.0);
}

TEST(Christoffel, ConformalNullCoordinates) {
  // g = 2F dxdy with F = exp(x + 2y) + 1
  auto m = MetricPatch::from_expressions({-1, 1, -1, 1, false, false}, {P("0"), P("exp(x + 2*y) + 1"), P("0")});
  const double x = 0.3, y = -0.2;
  const double F = std::exp(x + 2 * y) + 1;
  const auto c = christoffel(m, {x, y});
  EXPECT_NEAR(c(0, 0, 0), std::exp(x + 2 * y) / F, 1e-14);
  EXPECT_NEAR(c(1, 0, 0), 0, 1e-14);
  EXPECT_NEAR(c(1, 1, 1), 2 * std::exp(x + 2 * y) / F, 1e-14);
}

TEST(Christoffel, MetricCompatibilityResidual) {
  // ∂ₖ gᵢⱼ = Γˡₖᵢ gₗⱼ + Γˡₖⱼ gᵢₗ, with ∂ₖ g from finite differences of the components
  auto m = polynomial_h();
  const Vec2 p(0.3, 0.7);
  const auto c = christoffel(m, p);
  const Mat2 g = eval_metric(m, p);
  const double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = h;
    const Mat2 dg = (eval_metric(m, p + e) - eval_metric(m, p - e)) / (2 * h);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double r = 0;
        for (int l = 0; l < 2; ++l) r += c(l, k, i) * g(l, j) + c(l, k, j) * g(i, l);
        EXPECT_NEAR(dg(i, j), r, 1e-8);
      }
    EXPECT_NEAR(c(k, 0, 1), c(k, 1, 0), 0);
  }
}

TEST(Curvature, ConstantMetricIsFlat) {
  auto m = MetricPatch::from_expressions(Domain::unit_torus(), {P("3"), P("1"), P("-2")});
  EXPECT_EQ(curvature(m, {0.1, 0.2}), 0.0);
}

TEST(Curvature, PolynomialMetricSignAndShape) {
  // independent Brioschi oracle with the library's sign convention; K is linear in x and constant in y
  auto h = polynomial_h();
  for (double y : {-0.7, 0.0, 0.4, 1.9}) {
    EXPECT_NEAR(curvature(h, {0.3, y}), oracle_curvature(h, 0.3, y), 1e-12);
    EXPECT_NEAR(curvature(h, {0.3, y}), curvature(h, {0.3, 0.0}), 1e-12);
  }
  EXPECT_LT(curvature(h, {0.3, 0.5}), 0.0);  // sign follows −x
  EXPECT_NEAR(curvature(h, {0.6, 0.5}) / curvature(h, {0.3, 0.5}), 2.0, 1e-12);
}

TEST(Curvature, NullChartFamilyMatchesSymbolicOracle) {
  // g = 2dxdy + G(x)dy²: Γˣ_yy = GG'/2, Γˣ_xy = G'/2, Γʸ_yy = −G'/2, so K = −G''/2
  auto m = MetricPatch::from_expressions({0, 1, 0, 1, true, true}, {P("0"), P("1"), P("sin(2*pi*x)")});
  for (double x : {0.05, 0.3, 0.71}) {
    const double Gpp = -4 * kPi * kPi * std::sin(2 * kPi * x);
    EXPECT_NEAR(curvature(m, {x, 0.4}), -0.5 * Gpp, 1e-6);
    const auto c = christoffel(m, {x, 0.4});
    const double G = std::sin(2 * kPi * x), Gp = 2 * kPi * std::cos(2 * kPi * x);
    EXPECT_NEAR(c(0, 1, 1), 0.5 * G * Gp, 1e-12);
    EXPECT_NEAR(c(0, 0, 1), 0.5 * Gp, 1e-12);
    EXPECT_NEAR(c(1, 1, 1), -0.5 * Gp, 1e-12);
    EXPECT_NEAR(c(1, 0, 0), 0, 1e-12);
  }
}

TEST(Curvature, MatchesBrioschiOnRandomAnalyticMetrics) {
  std::mt19937 rng(7);
  for (int t = 0; t < 5; ++t) {
    auto m = random_torus_metric(rng);
    for (Vec2 p : {Vec2(0.1, 0.2), Vec2(0.77, 0.43)}) EXPECT_NEAR(curvature(m, p), oracle_curvature(m, p.x(), p.y()), 1e-9);
  }
}

TEST(Curvature, SpectralPathAgreesWithExactPath) {
  std::mt19937 rng(11);
  auto m = random_torus_metric(rng);
  auto s = m.sampled(GridSpec{m.domain(), 64, 64});
  EXPECT_LT(c0_distance(curvature_field(m.with_resolution(64, 64)), curvature_field(s)), 1e-8);
  // off-grid evaluation through interpolation
  EXPECT_NEAR(curvature(s, {0.321, 0.654}), curvature(m, {0.321, 0.654}), 1e-6);
}

TEST(Lightlike, Examples) {
  auto flat = MetricPatch::from_expressions(Domain::unit_torus(), {P("0"), P("0.5"), P("0")});
  auto d = lightlike_directions(flat, {0.2, 0.2});
  EXPECT_NEAR(d.angle[0], 0, 1e-15);
  EXPECT_NEAR(d.angle[1], kPi / 2, 1e-15);

  // (0,1) and (1,−2) for h at (1,1)
  auto dh = lightlike_directions(polynomial_h(), {1, 1});
  EXPECT_NEAR(dh.angle[0], kPi / 2, 1e-12);
  EXPECT_NEAR(std::tan(dh.angle[1]), -2.0, 1e-10);

  const double s5 = std::sqrt(5.0);
  Mat2 gA;
  gA << 2 / s5, -1 / s5, -1 / s5, -2 / s5;
  auto da = lightlike_directions(gA);
  EXPECT_NEAR(std::tan(da.angle[0]), (s5 - 1) / 2, 1e-12);
  EXPECT_NEAR(std::tan(da.angle[1]), -(s5 + 1) / 2, 1e-12);
  for (int f = 0; f < 2; ++f) {
    const Vec2 v = da.direction(f);
    EXPECT_LT(std::abs(v.dot(gA * v)), 1e-10);
  }
  Mat2 riem = Mat2::Identity();
  EXPECT_THROW(lightlike_directions(riem), SignatureError);
}

TEST(Pullback, IdentityAndLinear) {
  std::mt19937 rng(3);
  auto m = random_torus_metric(rng);
  EXPECT_LT(ck_distance(pullback(m, TorusDiffeo::identity()), m, 2), 1e-14);

  Mat2 Q;
  Q << 1, 2, 2, -1;
  auto c = MetricPatch::from_expressions(Domain::unit_torus(), {P("1"), P("2"), P("-1")}, 16, 16);
  IMat2 M;
  M << 2, 1, 1, 1;
  const Mat2 want = M.cast<double>().transpose() * Q * M.cast<double>();
  EXPECT_LT((eval_metric(pullback(c, TorusDiffeo::linear(M)), {0.3, 0.3}) - want).norm(), 1e-13);
  EXPECT_LT((eval_metric(pullback(c.sampled(), TorusDiffeo::linear(M)), {0.3, 0.3}) - want).norm(), 1e-12);
}

TEST(Pullback, AnosovPerturbationMatchesDirectComposition) {
  const double s5 = std::sqrt(5.0);
  // g_A + 0.1 sin(2πx) Y♭⊗Y♭ with Y the unit expanding eigenvector
  const Vec2 Y = Vec2(1, (s5 - 1) / 2).normalized();
  Mat2 gA;
  gA << 2 / s5, -1 / s5, -1 / s5, -2 / s5;
  const Vec2 Yf = gA * Y;
  const Expr f = P("0.1*sin(2*pi*x)");
  auto h = MetricPatch::from_expressions(Domain::unit_torus(),
                                         {Expr(gA(0, 0)) + f * Expr(Yf[0] * Yf[0]), Expr(gA(0, 1)) + f * Expr(Yf[0] * Yf[1]),
                                          Expr(gA(1, 1)) + f * Expr(Yf[1] * Yf[1])},
                                         32, 32);
  IMat2 A;
  A << 2, 1, 1, 1;
  auto p = pullback(h, TorusDiffeo::linear(A));
  const Mat2 Ar = A.cast<double>();
  for (Vec2 q : {Vec2(0.1, 0.2), Vec2(0.6, 0.9), Vec2(0.33, 0.5)}) {
    const Vec2 Aq = Ar * q;
    const Mat2 hAq = gA + 0.1 * std::sin(2 * kPi * Aq.x()) * Yf * Yf.transpose();
    EXPECT_LT((eval_metric(p, q) - Ar.transpose() * hAq * Ar).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pullback, FunctorialityOnAnalyticInputs) {
  std::mt19937 rng(5);
  auto h = random_torus_metric(rng);
  IMat2 A, B;
  A << 2, 1, 1, 1;
  B << 1, 1, 0, 1;
  auto phi = TorusDiffeo::with_displacement(A, P("0.05*sin(2*pi*y)"), P("0.03*cos(2*pi*x)"));
  auto psi = TorusDiffeo::with_displacement(B, P("0.02*sin(2*pi*(x+y))"), P("0"));
  auto lhs = pullback(pullback(h, phi), psi);
  auto rhs = pullback(h, phi.compose(psi));
  EXPECT_LT(ck_distance(lhs.with_resolution(32, 32), rhs.with_resolution(32, 32), 2), 1e-9);
  // numeric (non-symbolic) maps take the grid path and agree with the symbolic result
  auto phi_num = TorusDiffeo::from_map(A, [&](const Vec2& p) { return phi.evaluate(p); });
  auto grid = pullback(h.with_resolution(32, 32), phi_num);
  EXPECT_LT(ck_distance(grid, pullback(h, phi).with_resolution(32, 32), 0), 1e-12);
}

TEST(Pullback, CurvatureEquivarianceUnderRefinement) {
  std::mt19937 rng(9);
  auto h = random_torus_metric(rng);
  IMat2 M;
  M << 1, 1, 0, 1;
  auto phi = TorusDiffeo::with_displacement(M, P("0.04*sin(2*pi*y)"), P("0.02*sin(2*pi*x)"));
  double prev = 1e300;
  for (int n : {16, 32, 64}) {
    GridSpec g{h.domain(), n, n};
    auto pulled = pullback(h.sampled(g), phi);  // grid path
    GridArray Kphi(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) Kphi(i, j) = curvature(h, phi(g.point(i, j)));
    const double err = c0_distance(curvature_field(pulled), Kphi);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(CkDistance, Examples) {
  std::mt19937 rng(1);
  auto h = random_torus_metric(rng).with_resolution(32, 32);
  for (int k = 0; k <= 2; ++k) EXPECT_EQ(ck_distance(h, h, k), 0.0);
  const auto& e = h.expressions();
  auto h2 = MetricPatch::from_expressions(h.domain(), {e.E + Expr(0.25), e.F, e.G}, 32, 32);
  EXPECT_NEAR(ck_distance(h, h2, 0), 0.25, 1e-15);
  EXPECT_NEAR(ck_distance(h2, h, 2), 0.25, 1e-15);

  // ε sin(2πNx) ℓ⊗ℓ: C⁰ = ε‖ℓ⊗ℓ‖, C¹ = 2πNε‖ℓ⊗ℓ‖ with the entrywise max norm
  const double s5 = std::sqrt(5.0), eps = 0.01;
  const int N = 3;
  const Vec2 l(1, (s5 - 1) / 2);
  const Mat2 ll = l * l.transpose();
  Mat2 gA;
  gA << 2 / s5, -1 / s5, -1 / s5, -2 / s5;
  const Expr s = Expr(eps) * P("sin(6*pi*x)");
  auto base = MetricPatch::from_expressions(Domain::unit_torus(), {Expr(gA(0, 0)), Expr(gA(0, 1)), Expr(gA(1, 1))}, 48, 48);
  auto pert = MetricPatch::from_expressions(
      Domain::unit_torus(),
      {Expr(gA(0, 0)) + s * Expr(ll(0, 0)), Expr(gA(0, 1)) + s * Expr(ll(0, 1)), Expr(gA(1, 1)) + s * Expr(ll(1, 1))}, 48, 48);
  const double nrm = ll.cwiseAbs().maxCoeff();
  EXPECT_NEAR(ck_distance(base, pert, 0), eps * nrm, 1e-12);
  EXPECT_NEAR(ck_distance(base, pert, 1), 2 * kPi * N * eps * nrm, 1e-10);
  EXPECT_THROW(ck_distance(base, base.with_resolution(16, 16), 0), PreconditionError);
}

TEST(TotalCurvature, VanishesOnTori) {
  auto flat = MetricPatch::from_expressions(Domain::unit_torus(), {P("0"), P("0.5"), P("0")}, 32, 32);
  EXPECT_NEAR(total_curvature(flat), 0.0, 1e-15);
  auto conf = MetricPatch::from_expressions(Domain::unit_torus(), {P("0"), P("exp(sin(2*pi*x)*sin(2*pi*y))"), P("0")});
  EXPECT_NEAR(total_curvature(conf), 0.0, 1e-6);
  EXPECT_GT(c0_distance(curvature_field(conf), GridArray::Zero(128, 128)), 1.0);  // not trivially flat
  EXPECT_THROW(total_curvature(polynomial_h()), PreconditionError);
}
