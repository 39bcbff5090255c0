#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "lorentz/errors.hpp"
#include "lorentz/moduli.hpp"

using namespace lorentz;

namespace {
const double kSqrt5 = std::sqrt(5.0);

Mat2 M2(double a, double b, double c, double d) {
  Mat2 m;
  m << a, b, c, d;
  return m;
}

QuadraticForm2 gA_form() { return {(2 / kSqrt5) * M2(1, -0.5, -0.5, -1)}; }

IMat2 I2(int a, int b, int c, int d) {
  IMat2 m;
  m << a, b, c, d;
  return m;
}

// Oracle: brute force over all strings in {S,T,t}^k, filtering the forbidden adjacencies.
std::size_t oracle_word_count(int L) {
  std::size_t count = 0;
  for (int k = 1; k <= L; ++k) {
    std::size_t total = 1;
    for (int i = 0; i < k; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::string w;
      std::size_t c = code;
      for (int i = 0; i < k; ++i, c /= 3) w += "STt"[c % 3];
      if (w.find("SS") == std::string::npos && w.find("Tt") == std::string::npos &&
          w.find("tT") == std::string::npos)
        ++count;
    }
  }
  return count;
}
}  // namespace

TEST(Moduli, ActExamples) {
  const QuadraticForm2 J{M2(0, 1, 1, 0)};
  EXPECT_EQ(act(IMat2::Identity(), J).Q, J.Q);
  EXPECT_EQ(act(I2(1, 1, 0, 1), J).Q, M2(0, 1, 1, 2));
  EXPECT_LT((act(I2(2, 1, 1, 1), gA_form()).Q - gA_form().Q).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(act(I2(2, 0, 0, 1), J), PreconditionError);
  EXPECT_NO_THROW(act(I2(0, 1, 1, 0), J));  // det −1 is allowed
}

TEST(Moduli, DeterminantPreserved) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> U(-2, 2);
  const std::vector<Word> words = reduced_words(6);
  for (int k = 0; k < 200; ++k) {
    const QuadraticForm2 q = QuadraticForm2::from_endpoints(U(rng), U(rng) + 5);
    const IMat2& M = words[k * 7 % words.size()].matrix;
    EXPECT_NEAR(act(M, q).Q.determinant(), q.Q.determinant(), 1e-12 * (1 + act(M, q).Q.squaredNorm()));
  }
}

TEST(Moduli, SlopeExamples) {
  SlopePair s = slopes({M2(0, 1, 1, 0)});
  EXPECT_EQ(s.slope[0], 0);
  EXPECT_TRUE(std::isinf(s.slope[1]));
  EXPECT_TRUE(s.certificate[0].rational && s.certificate[1].rational);

  s = slopes(gA_form());
  EXPECT_NEAR(s.slope[0], (kSqrt5 - 1) / 2, 1e-14);
  EXPECT_NEAR(s.slope[1], -(kSqrt5 + 1) / 2, 1e-14);
  EXPECT_FALSE(s.certificate[0].rational);
  EXPECT_FALSE(s.certificate[1].rational);
  // golden-ratio continued fractions are all ones
  for (std::size_t k = 1; k < s.certificate[0].terms.size(); ++k) EXPECT_EQ(s.certificate[0].terms[k], 1);

  s = slopes({M2(-1, 0, 0, 1)});
  EXPECT_NEAR(s.slope[0], 1, 1e-15);
  EXPECT_NEAR(s.slope[1], -1, 1e-15);
  EXPECT_THROW(slopes({Mat2::Identity()}), SignatureError);
}

TEST(Moduli, SlopesAreNull) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int k = 0; k < 100; ++k) {
    const QuadraticForm2 q = QuadraticForm2::from_endpoints(U(rng), U(rng));
    const SlopePair s = slopes(q);
    for (double m : s.slope) {
      const Vec2 v = std::isinf(m) ? Vec2(0, 1) : Vec2(1, m).normalized();
      EXPECT_LT(std::abs(v.dot(q.Q * v)), 1e-12);
    }
  }
}

TEST(Moduli, Rationality) {
  RationalityCertificate c = rationality(355.0 / 113);
  EXPECT_TRUE(c.rational);
  EXPECT_EQ(c.p, 355);
  EXPECT_EQ(c.q, 113);
  EXPECT_EQ(c.terms, (std::vector<long long>{3, 7, 16}));
  c = rationality(std::numbers::pi - 3);
  EXPECT_FALSE(c.rational);
  EXPECT_EQ(c.terms[0], 0);
  EXPECT_EQ(c.terms[1], 7);
  EXPECT_EQ(c.terms[2], 15);
  EXPECT_TRUE(rationality(-2.5).rational);
}

TEST(Moduli, ModularGeodesicEquivariance) {
  ModularGeodesic g = to_modular_geodesic({M2(0, 1, 1, 0)});
  EXPECT_TRUE(g.vertical());
  EXPECT_EQ(std::min(g.end[0], g.end[1]), 0);

  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-2, 2);
  const std::vector<Word> words = reduced_words(5);
  for (int k = 0; k < 100; ++k) {
    const double t1 = U(rng), t2 = U(rng);
    const QuadraticForm2 q = QuadraticForm2::from_endpoints(t1, t2);
    const IMat2& M = words[k * 11 % words.size()].matrix;
    const Mat2 Minv = M.cast<double>().inverse();
    const ModularGeodesic h = to_modular_geodesic(act(M, q));
    std::multiset<double> expect{mobius(Minv, t1), mobius(Minv, t2)}, got{h.end[0], h.end[1]};
    auto e = expect.begin();
    for (double v : got) {
      if (std::isinf(v) || std::isinf(*e)) EXPECT_EQ(std::isinf(v), std::isinf(*e));
      else EXPECT_NEAR(v, *e, 1e-10 * (1 + std::abs(v)));
      ++e;
    }
  }
  // T shifts the endpoints by −1
  const ModularGeodesic a = to_modular_geodesic(QuadraticForm2::from_endpoints(0.3, 1.7));
  const ModularGeodesic b = to_modular_geodesic(act(generator_T(), QuadraticForm2::from_endpoints(0.3, 1.7)));
  EXPECT_NEAR(std::min(b.end[0], b.end[1]), std::min(a.end[0], a.end[1]) - 1, 1e-14);
  EXPECT_NEAR(std::max(b.end[0], b.end[1]), std::max(a.end[0], a.end[1]) - 1, 1e-14);

  // g_A: endpoints are the fixed points of A's Möbius action
  const ModularGeodesic ga = to_modular_geodesic(gA_form());
  for (double t : ga.end) EXPECT_NEAR(mobius(M2(2, 1, 1, 1), t), t, 1e-13);
}

TEST(Moduli, WordEnumeration) {
  for (int L = 1; L <= 7; ++L) EXPECT_EQ(reduced_words(L).size(), oracle_word_count(L));
  for (const Word& w : reduced_words(4)) {
    IMat2 m = IMat2::Identity();
    for (char c : w.letters) m = m * (c == 'S' ? generator_S() : c == 'T' ? generator_T() : I2(1, -1, 0, 1));
    EXPECT_EQ(m, w.matrix);
  }
}

TEST(Moduli, OrbitTrichotomy) {
  // rational: displacements are even integers, never 0 for M ≠ ±Id
  const OrbitProbe rational = orbit_probe({M2(0, 1, 1, 0)}, 8);
  ASSERT_EQ(rational.table.size(), 8u);
  for (const auto& [L, d] : rational.table) EXPECT_GE(d, 1.0) << L;

  // quadratic irrational: a stabilizer word exists and is exact in ℚ(√5)
  const OrbitProbe fixed = orbit_probe(gA_form(), 8);
  EXPECT_LT(fixed.table.back().second, 1e-12);
  for (const QSqrt5& e : exact_displacement(fixed.best.matrix, anosov_form_exact())) EXPECT_TRUE(e.is_zero());
  for (const QSqrt5& e : exact_displacement(I2(2, 1, 1, 1), anosov_form_exact())) EXPECT_TRUE(e.is_zero());
  bool moved = false;
  for (const QSqrt5& e : exact_displacement(generator_T(), anosov_form_exact())) moved |= !e.is_zero();
  EXPECT_TRUE(moved);

  // generic: the infimum keeps dropping (slowly: close returns of a dense orbit need long words)
  const OrbitProbe generic = orbit_probe(QuadraticForm2::from_endpoints(std::numbers::pi - 3, std::numbers::e), 12);
  int drops = 0;
  for (std::size_t k = 1; k < generic.table.size(); ++k) {
    EXPECT_LE(generic.table[k].second, generic.table[k - 1].second);
    if (generic.table[k].second < generic.table[k - 1].second) ++drops;
  }
  EXPECT_GE(drops, 2);
  EXPECT_LT(generic.table.back().second, 0.5);
  EXPECT_GT(generic.table.back().second, 0);
}

TEST(Moduli, ExactFieldArithmetic) {
  const QSqrt5 phi{BigRational(1, 2), BigRational(1, 2)};
  EXPECT_EQ(phi * phi, phi + QSqrt5(1));
  EXPECT_EQ((QSqrt5(1) / phi), phi - QSqrt5(1));
  EXPECT_NEAR(phi.to_double(), (1 + kSqrt5) / 2, 1e-15);
  const QMat2 g = anosov_form_exact();
  const QSqrt5 det = g[0] * g[3] - g[1] * g[2];
  EXPECT_EQ(det, QSqrt5(-1));
}

TEST(Ergodicity, CellAreasAndDomainCells) {
  const ErgodicityReport rep = ergodicity_statistics(QuadraticForm2::from_endpoints(0.3, 2.1), {10000, 8, 1, 30});
  double total = 0;
  for (double e : rep.expected) total += e;
  EXPECT_NEAR(total, 1, 1e-6);
  EXPECT_EQ(rep.cells_in_domain, 62);
}

TEST(Ergodicity, Trichotomy) {
  const auto t0 = std::chrono::steady_clock::now();
  const ErgodicityReport generic =
      ergodicity_statistics(QuadraticForm2::from_endpoints(std::numbers::pi - 3, std::numbers::e - 3));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(generic.coverage, 0.95);
  EXPECT_LT(secs, 60);

  const ErgodicityReport rational = ergodicity_statistics({M2(0, 1, 1, 0)}, {20000, 8, 1, 30});
  EXPECT_LE(rational.covered, 8);

  const ErgodicityReport closed = ergodicity_statistics(gA_form(), {20000, 8, 1, 30});
  EXPECT_LT(closed.coverage, 0.5);
  EXPECT_GT(closed.chi_square, 10 * generic.chi_square * 20000 / generic.samples);
}

TEST(Ergodicity, Reproducible) {
  const auto q = QuadraticForm2::from_endpoints(0.2, 1.9);
  EXPECT_EQ(ergodicity_statistics(q, {10000, 8, 5, 30}).counts, ergodicity_statistics(q, {10000, 8, 5, 30}).counts);
  EXPECT_NE(ergodicity_statistics(q, {10000, 8, 5, 30}).counts, ergodicity_statistics(q, {10000, 8, 6, 30}).counts);
}
