// Acceptance driver: `acceptance --criterion N` prints one PASS/FAIL line for criterion N
// (all nine when no criterion is given) and exits non-zero on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "lorentz/approx.hpp"
#include "lorentz/io.hpp"
#include "lorentz/lightlike.hpp"
#include "lorentz/moduli.hpp"
#include "lorentz/psl2r.hpp"

using namespace lorentz;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string f(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Expr P(const std::string& s) { return Expr::parse(s); }

/// Analytic doubly periodic metric with F ≥ 0.7 and |E|, |G| ≤ 0.6, hence Lorentzian everywhere.
MetricPatch random_torus_metric(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> amp(-0.3, 0.3), phase(0, 2 * kPi);
  std::uniform_int_distribution<int> k(0, 2);
  auto term = [&] {
    int a = k(rng), b = k(rng);
    if (a == 0 && b == 0) a = 1;
    std::ostringstream s;
    s.precision(17);
    s << amp(rng) << "*sin(2*pi*(" << a << "*x + " << b << "*y) + " << phase(rng) << ")";
    return s.str();
  };
  return MetricPatch::from_expressions(Domain::unit_torus(),
                                       {P(term() + " + " + term()), P("1 + " + term()), P(term() + " + " + term())}, n, n);
}

TorusDiffeo random_diffeo(std::mt19937& rng) {
  static const int mats[3][4] = {{2, 1, 1, 1}, {1, 1, 0, 1}, {1, 0, 0, 1}};
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_real_distribution<double> amp(-0.04, 0.04);
  const int* m = mats[pick(rng)];
  IMat2 M;
  M << m[0], m[1], m[2], m[3];
  std::ostringstream dx, dy;
  dx.precision(17);
  dy.precision(17);
  dx << amp(rng) << "*sin(2*pi*y)";
  dy << amp(rng) << "*cos(2*pi*(x+y))";
  return TorusDiffeo::with_displacement(M, P(dx.str()), P(dy.str()));
}

MatX random_lorentzian(std::mt19937& rng, int m) {
  std::uniform_real_distribution<double> U(0.5, 2.0), N(-1, 1);
  MatX Q = MatX::NullaryExpr(m, m, [&] { return N(rng); }).householderQr().householderQ();
  Eigen::VectorXd d(m);
  d[0] = -U(rng);
  for (int i = 1; i < m; ++i) d[i] = U(rng);
  return Q * d.asDiagonal() * Q.transpose();
}

// ---- criteria -------------------------------------------------------------------

Outcome curvature_anchor() {
  // h = dxdy + 2xy²dx²: E = 2xy², F = ½, G = 0 on [−1, 1]²; the target is K = −x
  const ExprMetric h{P("2*x*y^2"), P("0.5"), P("0")};
  const Domain d{-1, 1, -1, 1, false, false};
  const MetricPatch exact = MetricPatch::from_expressions(d, h, 64, 64);
  const MetricPatch grid = exact.sampled();
  const GridSpec& g = exact.grid();
  const GridArray Ke = curvature_field(exact), Kg = curvature_field(grid);
  double err_e = 0, err_g = 0, scale = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.point(i, j).x();
      err_e = std::max(err_e, std::abs(Ke(i, j) + x));
      err_g = std::max(err_g, std::abs(Kg(i, j) + x));
      if (std::abs(x) > 0.1) scale = std::max(scale, Ke(i, j) / -x);
    }
  Outcome o;
  o.require(err_e < 1e-8, "exact path max|K+x| = " + f(err_e) + " (< 1e-8)");
  o.require(err_g < 1e-4, "grid path max|K+x| = " + f(err_g) + " (< 1e-4)");
  o.detail += "; observed K/(-x) = " + f(scale);
  return o;
}

Outcome torus_gauss_bonnet() {
  std::mt19937 rng(2024);
  double worst = 0, kmax = 0;
  for (int t = 0; t < 10; ++t) {
    const MetricPatch m = random_torus_metric(rng, 128);
    worst = std::max(worst, std::abs(total_curvature(m)));
    kmax = std::max(kmax, curvature_field(m).abs().maxCoeff());
  }
  Outcome o;
  o.require(worst < 1e-6, "max |int K dv| over 10 metrics = " + f(worst) + " (< 1e-6)");
  o.require(kmax > 1e-2, "metrics are curved, max|K| = " + f(kmax));
  return o;
}

Outcome lightlike_gauss_bonnet() {
  const MetricPatch m =
      MetricPatch::from_expressions({0, 1, 0, 1, false, true}, {P("0"), P("1"), P("x*(1-x)")}, 64, 64);
  const auto A = LightlikeAnnulus::build(m, {1, 0.3}, {0, 0.3}, 1);
  const GaussBonnetReport r = annulus_gauss_bonnet(A);
  // G = x(1 − x): −½(G′(1) − G′(0)) = −½(−1 − 1) = 1
  const double oracle = 1.0;
  Outcome o;
  o.require(r.residual() < 1e-3, "|int K dv - ln(l1/l2)| = " + f(r.residual()) + " (< 1e-3)");
  o.require(std::abs(r.integral - oracle) < 1e-3, "int K dv = " + format_double(r.integral));
  o.require(std::abs(r.log_ratio - oracle) < 1e-3, "ln(l1/l2) = " + format_double(r.log_ratio));
  return o;
}

Outcome anosov_rates() {
  AnosovSystem sys;  // ε = 0.1, f = sin 2πx, n_max = 8, grid 256
  sys.epsilon = 0.1;
  sys.grid = 256;
  sys.n_max = 8;
  const auto rows = anosov_experiment(sys);
  const RateVerdict v = check_rates(rows, 3, 8, 0.05);
  Outcome o;
  o.require(v.c0, "C0 ratio deviation from 0.14590 = " + f(v.worst_c0) + " (< 5%)");
  o.require(v.c1, "C1 ratio deviation from 0.38197 = " + f(v.worst_c1) + " (< 5%)");
  o.require(v.c2, "C2 max/min = " + f(v.c2_band) + " (< 2)");
  return o;
}

Outcome as_field() {
  const int n = 64;
  const GridSpec grid{Domain::unit_torus(), n, n};
  const Mat2 g = anosov_form();
  const MetricPatch gA =
      MetricPatch::from_expressions(Domain::unit_torus(), {Expr(g(0, 0)), Expr(g(0, 1)), Expr(g(1, 1))}, n, n);
  const ASFieldReport rep = as_field_estimate(gA, TorusDiffeo::linear(anosov_matrix()), 20, grid);
  // contracting eigenline of [[2,1],[1,1]]: (1, −(1+√5)/2), the root of t² − 3t + 1 below 1
  const Vec2 c(1, -(1 + std::sqrt(5.0)) / 2);
  double worst = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 v = rep.field.direction(i, j);
      worst = std::max(worst, std::asin(std::min(1.0, std::abs(v.x() * c.y() - v.y() * c.x()) / c.norm())));
    }
  Outcome o;
  o.require(worst < 1e-6, "max angle error = " + f(worst) + " (< 1e-6)");
  o.require(rep.null_residual < 1e-8, "null residual = " + f(rep.null_residual) + " (< 1e-8)");
  o.require(rep.geodesic_residual < 1e-6, "geodesic residual = " + f(rep.geodesic_residual) + " (< 1e-6)");
  return o;
}

Outcome form_reduction() {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> N(-1, 1), S(0, 1);
  double worst_res = 0, worst_c = 0;
  for (int t = 0; t < 1000; ++t) {
    const int m = 2 + t % 2;
    const MatX H = random_lorentzian(rng, m);
    MatX E = MatX::NullaryExpr(m, m, [&] { return N(rng); });
    E = 0.5 * (E + E.transpose()).eval();
    const MatX Hn = H + (1e-2 * S(rng) / op_norm(E)) * E;
    const Reduction r = reduce_to_base(H, Hn);
    worst_res = std::max(worst_res, (r.M.transpose() * H * r.M - Hn).cwiseAbs().maxCoeff());
    worst_c = std::max(worst_c, op_norm(r.M - MatX::Identity(m, m)) / op_norm(Hn - H));
  }
  Outcome o;
  o.require(worst_res < 1e-12, "max residual = " + f(worst_res) + " (< 1e-12)");
  o.require(worst_c <= 5, "max |M-Id|/|Hn-H| = " + f(worst_c) + " (<= 5)");
  return o;
}

/// Exhaustive integer enumeration of reduced S/T words, independent of the library's enumerator.
long long rational_orbit_minimum(const Eigen::Matrix2i& Q, int L) {
  struct Node {
    Eigen::Matrix2i M;
    char last;
  };
  Eigen::Matrix2i S, T, Ti;
  S << 0, -1, 1, 0;
  T << 1, 1, 0, 1;
  Ti << 1, -1, 0, 1;
  std::vector<Node> layer{{Eigen::Matrix2i::Identity(), 0}};
  long long best = std::numeric_limits<long long>::max();
  for (int len = 1; len <= L; ++len) {
    std::vector<Node> next;
    for (const Node& nd : layer)
      for (char c : {'S', 'T', 't'}) {
        if ((c == 'S' && nd.last == 'S') || (c == 'T' && nd.last == 't') || (c == 't' && nd.last == 'T')) continue;
        const Eigen::Matrix2i M = nd.M * (c == 'S' ? S : c == 'T' ? T : Ti);
        next.push_back({M, c});
        if (M == Eigen::Matrix2i::Identity() || M == -Eigen::Matrix2i::Identity()) continue;
        const Eigen::Matrix2i D = M.transpose() * Q * M - Q;
        best = std::min<long long>(best, D.cwiseAbs().maxCoeff());
      }
    layer = std::move(next);
  }
  return best;
}

Outcome moduli_trichotomy() {
  Outcome o;
  QuadraticForm2 rational;
  rational.Q << 0, 1, 1, 0;
  const OrbitProbe rp = orbit_probe(rational, 8);
  Eigen::Matrix2i Qi;
  Qi << 0, 1, 1, 0;
  const long long oracle = rational_orbit_minimum(Qi, 8);
  o.require(rp.table.back().second >= 1 && rp.table.back().second == double(oracle),
            "rational min displacement (L<=8) = " + f(rp.table.back().second) + ", enumeration oracle " +
                std::to_string(oracle));

  QuadraticForm2 fixed;
  fixed.Q = anosov_form();
  const OrbitProbe fp = orbit_probe(fixed, 8);
  bool exact = !(fp.best.matrix == IMat2::Identity() || fp.best.matrix == -IMat2::Identity());
  for (const QSqrt5& e : exact_displacement(fp.best.matrix, anosov_form_exact())) exact = exact && e.is_zero();
  o.require(exact, "g_A stabilizer word " + fp.best.letters + " exact in Q(sqrt5)");

  ErgodicityOptions eo;
  eo.budget = 100000;
  eo.bins = 8;
  eo.seed = 1;
  const ErgodicityReport er =
      ergodicity_statistics(QuadraticForm2::from_endpoints(std::numbers::pi - 3, std::numbers::e), eo);
  o.require(er.coverage >= 0.95, "generic coverage " + std::to_string(er.covered) + "/" +
                                     std::to_string(er.cells_in_domain) + " = " + f(er.coverage) + " (>= 0.95)");
  return o;
}

Outcome classifier() {
  std::vector<long> ns;
  for (long n = 2; n <= 100; ++n) ns.push_back(n);
  const auto rows = sequence_experiment(1, 1, 1, ns);
  std::string bad;
  bool agree = true;
  for (const auto& r : rows) {
    if (r.n == 0) continue;
    if (!r.lorentzian || r.verdict != IsometryVerdict::FullTimesZ2) {
      bad += (bad.empty() ? "" : ",") + std::to_string(r.n) + (r.lorentzian ? "" : "(degenerate)");
    }
    if (r.lorentzian && r.exact_available && r.exact_verdict != r.verdict) agree = false;
  }
  const auto& lim = rows.back();
  if (lim.exact_available && lim.exact_verdict != lim.verdict) agree = false;
  Outcome o;
  o.require(bad.empty(), bad.empty() ? "H_n FullTimesZ2 for n=2..100" : "H_n not FullTimesZ2 at n = " + bad);
  o.require(lim.lorentzian && lim.verdict == IsometryVerdict::LeftOnly, "H_inf " + to_string(lim.verdict));
  o.require(agree, "exact and float lanes agree");
  const CommonPlane pl = common_lightlike_plane(h_sequence(1, 1, 1, 0));
  const double dev = std::max(std::abs(pl.det_H), std::abs(pl.det_K));
  o.require(dev < 1e-10, "plane Gram determinants " + f(dev) + " (< 1e-10)");
  return o;
}

Outcome property_suites() {
  Outcome o;
  std::mt19937 rng(99);

  // signature preservation: pullbacks of Lorentzian metrics and the modular action
  double worst_det = -INFINITY, worst_act = 0;
  for (int t = 0; t < 6; ++t) {
    const MetricPatch h = random_torus_metric(rng, 32);
    const MetricPatch p = pullback(h, random_diffeo(rng));
    for (const auto& j : p.node_jets()) worst_det = std::max(worst_det, j.g.determinant());
  }
  for (const Word& w : reduced_words(6)) {
    QuadraticForm2 q = QuadraticForm2::from_endpoints(0.3, -1.7);
    worst_act = std::max(worst_act, std::abs(std::abs(act(w.matrix, q).Q.determinant()) - std::abs(q.Q.determinant())));
  }
  o.require(worst_det < 0, "pullback max det = " + f(worst_det) + " (< 0)");
  o.require(worst_act < 1e-12, "modular action det drift = " + f(worst_act) + " (< 1e-12)");

  // pullback functoriality
  double worst_fun = 0;
  for (int t = 0; t < 3; ++t) {
    const MetricPatch h = random_torus_metric(rng, 32);
    const TorusDiffeo phi = random_diffeo(rng), psi = random_diffeo(rng);
    worst_fun = std::max(worst_fun, ck_distance(pullback(pullback(h, phi), psi), pullback(h, phi.compose(psi)), 2));
  }
  o.require(worst_fun < 1e-9, "functoriality C2 gap = " + f(worst_fun) + " (< 1e-9)");

  // curvature equivariance under grid refinement
  {
    const MetricPatch h = random_torus_metric(rng, 16);
    const TorusDiffeo phi = random_diffeo(rng);
    std::vector<double> errs;
    for (int n : {16, 32, 64, 128}) {
      const GridSpec g{h.domain(), n, n};
      const GridArray K = curvature_field(pullback(h.sampled(g), phi));
      GridArray Kphi(n, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) Kphi(i, j) = curvature(h, phi(g.point(i, j)));
      errs.push_back(c0_distance(K, Kphi));
    }
    bool decreasing = true;
    std::string trail;
    for (std::size_t k = 0; k < errs.size(); ++k) {
      if (k) decreasing = decreasing && errs[k] < errs[k - 1];
      trail += (k ? " > " : "") + f(errs[k]);
    }
    o.require(decreasing && errs.back() < 1e-6, "equivariance errors " + trail + " (-> 0, last < 1e-6)");
  }

  // geodesic null conservation over unit arclength
  double worst_null = 0;
  for (int t = 0; t < 3; ++t) {
    const MetricPatch h = random_torus_metric(rng, 32);
    std::uniform_real_distribution<double> U(0, 1);
    for (int s = 0; s < 8; ++s) {
      const Vec2 p(U(rng), U(rng));
      const Vec2 v = lightlike_directions(eval_metric(h, p)).direction(s % 2);
      const GeodesicState e = exp_map(h, {p, v}, 1.0);
      worst_null = std::max(worst_null, std::abs(e.v.dot(eval_metric(h, e.p) * e.v)));
    }
  }
  o.require(worst_null < 1e-8, "null drift = " + f(worst_null) + " (< 1e-8)");

  // h_polar reconstruction
  double worst_rec = 0, worst_iso = 0;
  std::uniform_real_distribution<double> U(-3, 3);
  for (int t = 0; t < 1000; ++t) {
    const Mat2 H = random_lorentzian(rng, 2);
    Mat2 M;
    M << U(rng), U(rng), U(rng), U(rng);
    if (std::abs(M.determinant()) < 1e-3) continue;
    const PolarDecomposition d = h_polar(H, M);
    worst_rec = std::max(worst_rec, op_norm(d.I * d.P - M) / op_norm(M));
    worst_iso = std::max(worst_iso, (d.I.transpose() * H * d.I - H).cwiseAbs().maxCoeff());
  }
  o.require(worst_rec <= 1e-12, "h_polar reconstruction = " + f(worst_rec) + " (<= 1e-12)");
  o.require(worst_iso <= 1e-12, "h_polar isometry = " + f(worst_iso) + " (<= 1e-12)");
  return o;
}

struct Criterion {
  const char* name;
  double limit_s;  // runtime budget; 0 when none is pinned
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"curvature anchor", 1, curvature_anchor},
      {"torus Gauss-Bonnet", 10, torus_gauss_bonnet},
      {"lightlike Gauss-Bonnet", 5, lightlike_gauss_bonnet},
      {"Anosov rates", 30, anosov_rates},
      {"AS field", 10, as_field},
      {"form reduction", 2, form_reduction},
      {"moduli trichotomy", 60, moduli_trichotomy},
      {"classifier", 1, classifier},
      {"property suites", 0, property_suites},
  };
  return all;
}

bool run_one(int k) {
  const Criterion& c = criteria().at(k - 1);
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (c.limit_s > 0) o.require(dt < c.limit_s, "runtime " + f(dt) + " s (< " + f(c.limit_s) + " s)");
  else o.detail += "; runtime " + f(dt) + " s";
  std::printf("criterion %d %s: %s | %s\n", k, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }
  const int n = static_cast<int>(criteria().size());
  if (only < 0 || only > n) {
    std::fprintf(stderr, "criterion must lie in 1..%d\n", n);
    return 2;
  }
  bool ok = true;
  for (int k = 1; k <= n; ++k)
    if (only == 0 || only == k) ok = run_one(k) && ok;
  return ok ? 0 : 1;
}
