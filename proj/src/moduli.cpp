#include "lorentz/moduli.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "lorentz/errors.hpp"

namespace lorentz {

double QSqrt5::to_double() const {
  using boost::multiprecision::cpp_int;
  auto conv = [](const BigRational& r) {
    return static_cast<double>(r.numerator().convert_to<long double>() / r.denominator().convert_to<long double>());
  };
  return conv(a) + conv(b) * std::sqrt(5.0);
}

std::ostream& operator<<(std::ostream& os, const QSqrt5& x) {
  return os << x.a.numerator() << "/" << x.a.denominator() << " + " << x.b.numerator() << "/" << x.b.denominator()
            << "*sqrt(5)";
}

namespace {

void require_form(const Mat2& Q) {
  if (!Q.allFinite() || std::abs(Q(0, 1) - Q(1, 0)) > 1e-14 * Q.cwiseAbs().maxCoeff())
    throw PreconditionError("quadratic form must be a finite symmetric matrix");
  if (!(Q.determinant() < 0)) throw SignatureError("quadratic form is not of signature (1,1)");
}

}  // namespace

QuadraticForm2 QuadraticForm2::normalized() const {
  require_form(Q);
  return {Q / std::sqrt(-Q.determinant())};
}

QuadraticForm2 QuadraticForm2::from_endpoints(double tau1, double tau2) {
  // Q(u, v) = (u − τ₁v)(u − τ₂v), or v(u − τv) when one endpoint is infinite
  if (tau1 == tau2) throw PreconditionError("endpoints must be distinct");
  Mat2 Q;
  if (std::isinf(tau1) || std::isinf(tau2)) {
    const double t = std::isinf(tau1) ? tau2 : tau1;
    Q << 0, 0.5, 0.5, -t;
  } else {
    Q << 1, -0.5 * (tau1 + tau2), -0.5 * (tau1 + tau2), tau1 * tau2;
  }
  return QuadraticForm2{Q}.normalized();
}

RationalityCertificate rationality(double x, long long cap) {
  RationalityCertificate c;
  if (std::isinf(x)) {
    c.rational = true;
    c.p = 1;
    return c;
  }
  long long h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    if (std::abs(a) > 9e15) break;
    const long long ai = static_cast<long long>(a);
    const double hd = static_cast<double>(ai) * h1 + h2, kd = static_cast<double>(ai) * k1 + k2;
    if (kd > static_cast<double>(cap) || std::abs(hd) > 9e15) break;
    const long long h = ai * h1 + h2, k = ai * k1 + k2;
    c.terms.push_back(ai);
    c.p = h;
    c.q = k;
    if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= 1e-14 * std::max(1.0, std::abs(x))) {
      c.rational = true;
      return c;
    }
    h2 = h1, h1 = h, k2 = k1, k1 = k;
    const double frac = r - a;
    if (frac <= 0) break;
    r = 1 / frac;
  }
  return c;
}

SlopePair slopes(const QuadraticForm2& q) {
  require_form(q.Q);
  // null directions (1, m): c m² + 2b m + a = 0
  const double a = q.Q(0, 0), b = q.Q(0, 1), c = q.Q(1, 1);
  const double D = std::sqrt(b * b - a * c);
  double m[2];
  if (c == 0) {
    m[0] = -a / (2 * b);
    m[1] = INFINITY;
  } else {
    const double s = -(b + (b >= 0 ? D : -D));
    m[0] = s / c;
    m[1] = a / s;
  }
  auto angle = [](double v) {
    if (std::isinf(v)) return M_PI / 2;
    const double t = std::atan(v);
    return t < 0 ? t + M_PI : t;
  };
  if (angle(m[1]) < angle(m[0])) std::swap(m[0], m[1]);
  SlopePair sp;
  for (int k = 0; k < 2; ++k) {
    sp.slope[k] = m[k];
    sp.certificate[k] = rationality(m[k]);
  }
  return sp;
}

QuadraticForm2 act(const IMat2& M, const QuadraticForm2& q) {
  const int det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  if (std::abs(det) != 1) throw PreconditionError("act: matrix is not unimodular");
  const Mat2 Md = M.cast<double>();
  Mat2 R = Md.transpose() * q.Q * Md;
  R(1, 0) = R(0, 1);
  return {R};
}

double mobius(const Mat2& M, double tau) {
  if (std::isinf(tau)) return M(1, 0) == 0 ? INFINITY : M(0, 0) / M(1, 0);
  const double den = M(1, 0) * tau + M(1, 1);
  if (den == 0) return INFINITY;
  return (M(0, 0) * tau + M(0, 1)) / den;
}

bool ModularGeodesic::vertical() const { return std::isinf(end[0]) || std::isinf(end[1]); }

ModularGeodesic to_modular_geodesic(const QuadraticForm2& q) {
  const SlopePair sp = slopes(q);
  ModularGeodesic g;
  for (int k = 0; k < 2; ++k) {
    // null direction (1, m) is projectively (τ, 1) with τ = 1/m
    const double m = sp.slope[k];
    g.end[k] = std::isinf(m) ? 0.0 : (m == 0 ? INFINITY : 1 / m);
  }
  return g;
}

IMat2 generator_S() {
  IMat2 S;
  S << 0, -1, 1, 0;
  return S;
}

IMat2 generator_T() {
  IMat2 T;
  T << 1, 1, 0, 1;
  return T;
}

std::vector<Word> reduced_words(int max_length) {
  IMat2 Ti;
  Ti << 1, -1, 0, 1;
  const IMat2 gens[3] = {generator_S(), generator_T(), Ti};
  const char names[3] = {'S', 'T', 't'};
  std::vector<Word> out, frontier{Word{}};
  for (int len = 1; len <= max_length; ++len) {
    std::vector<Word> next;
    for (const Word& w : frontier)
      for (int g = 0; g < 3; ++g) {
        if (!w.letters.empty()) {
          const char last = w.letters.back();
          if ((last == 'S' && g == 0) || (last == 'T' && g == 2) || (last == 't' && g == 1)) continue;
        }
        next.push_back({w.letters + names[g], w.matrix * gens[g]});
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

OrbitProbe orbit_probe(const QuadraticForm2& q, int max_length) {
  require_form(q.Q);
  OrbitProbe probe;
  double best = INFINITY;
  int len = 1;
  const std::vector<Word> words = reduced_words(max_length);
  for (const Word& w : words) {
    if (static_cast<int>(w.letters.size()) > len) {
      probe.table.emplace_back(len, best);
      len = static_cast<int>(w.letters.size());
    }
    if (w.matrix == IMat2::Identity() || w.matrix == -IMat2::Identity()) continue;
    const double d = (act(w.matrix, q).Q - q.Q).cwiseAbs().maxCoeff();
    if (d < best) {
      best = d;
      probe.best = w;
    }
  }
  if (max_length >= 1) probe.table.emplace_back(len, best);
  return probe;
}

QMat2 anosov_form_exact() {
  const QSqrt5 d{BigRational(0), BigRational(2, 5)}, o{BigRational(0), BigRational(-1, 5)};
  return {d, o, o, -d};
}

QMat2 to_exact(const IMat2& M) { return {QSqrt5(M(0, 0)), QSqrt5(M(0, 1)), QSqrt5(M(1, 0)), QSqrt5(M(1, 1))}; }

QMat2 exact_displacement(const IMat2& M, const QMat2& Q) {
  const QMat2 E = to_exact(M);
  const QMat2 R = transpose(E) * Q * E;
  return {R[0] - Q[0], R[1] - Q[1], R[2] - Q[2], R[3] - Q[3]};
}

namespace {

/// Reduce z = x + iy to the standard fundamental domain and return it in double precision.
template <class Real>
std::pair<double, double> reduce_to_domain(Real x, Real y) {
  using std::floor;
  for (int it = 0; it < 100000; ++it) {
    x -= floor(x + Real(0.5));
    const Real r2 = x * x + y * y;
    if (!(r2 < 1)) break;
    x = -x / r2;
    y = y / r2;
  }
  return {static_cast<double>(x), static_cast<double>(y)};
}

template <class Real>
std::pair<double, double> geodesic_point(const ModularGeodesic& g, double t) {
  using std::exp;
  if (g.vertical()) {
    const double x0 = std::isinf(g.end[0]) ? g.end[1] : g.end[0];
    return reduce_to_domain<Real>(Real(x0), exp(Real(t)));
  }
  const Real t1 = g.end[0], t2 = g.end[1];
  const Real a = exp(Real(-t));
  const Real den = 1 + a * a;
  const Real gap = t1 > t2 ? Real(t1 - t2) : Real(t2 - t1);
  return reduce_to_domain<Real>((t1 + t2 * a * a) / den, a * gap / den);
}

double cell_area(double x0, double x1, double s0, double s1) {
  // ∫ clamp(1/√(1−x²) − s0, 0, s1 − s0) dx by composite Simpson
  const int n = 2000;
  const double h = (x1 - x0) / n;
  double sum = 0;
  for (int k = 0; k <= n; ++k) {
    const double x = x0 + k * h;
    const double v = std::clamp(1 / std::sqrt(1 - x * x) - s0, 0.0, s1 - s0);
    sum += v * (k == 0 || k == n ? 1 : (k % 2 ? 4 : 2));
  }
  return sum * h / 3;
}

}  // namespace

ErgodicityReport ergodicity_statistics(const QuadraticForm2& q, const ErgodicityOptions& opt) {
  if (opt.budget < 1 || opt.bins < 1 || !(opt.horizon > 0) || opt.horizon > 80)
    throw PreconditionError("ergodicity_statistics: invalid options");
  const ModularGeodesic g = to_modular_geodesic(q.normalized());
  const int B = opt.bins;
  const double smax = 2 / std::sqrt(3.0);
  ErgodicityReport rep;
  rep.bins = B;
  rep.samples = opt.budget;
  rep.counts.assign(B * B, 0);
  rep.expected.assign(B * B, 0);
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j) {
      const double a = cell_area(-0.5 + double(i) / B, -0.5 + double(i + 1) / B, smax * j / B, smax * (j + 1) / B);
      rep.expected[i * B + j] = a / (M_PI / 3);
      if (a > 1e-12) ++rep.cells_in_domain;
    }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(-opt.horizon, opt.horizon);
  // points reach height ~e^{−T}; the working precision must resolve x at that scale
  const bool wide = opt.horizon > 30;
  for (long s = 0; s < opt.budget; ++s) {
    const double t = U(rng);
    const auto [x, y] = wide ? geodesic_point<boost::multiprecision::cpp_bin_float_50>(g, t)
                             : geodesic_point<long double>(g, t);
    const int i = std::clamp(static_cast<int>(std::floor((x + 0.5) * B)), 0, B - 1);
    const int j = std::clamp(static_cast<int>(std::floor(1 / y / smax * B)), 0, B - 1);
    ++rep.counts[i * B + j];
  }
  for (int c = 0; c < B * B; ++c) {
    if (rep.expected[c] * (M_PI / 3) <= 1e-12) continue;
    if (rep.counts[c] > 0) ++rep.covered;
    const double e = rep.expected[c] * opt.budget;
    rep.chi_square += (rep.counts[c] - e) * (rep.counts[c] - e) / e;
  }
  rep.coverage = double(rep.covered) / rep.cells_in_domain;
  return rep;
}

}  // namespace lorentz
