#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "lorentz/approx.hpp"
#include "lorentz/io.hpp"
#include "lorentz/lightlike.hpp"
#include "lorentz/moduli.hpp"
#include "lorentz/psl2r.hpp"

namespace lorentz::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---- plumbing ------------------------------------------------------------------

/// Outcome of the `--assert` checks; the artifact is written either way.
struct Verdict {
  bool checked = false;
  bool passed = true;
  std::vector<std::string> lines;

  void check(const std::string& name, bool ok, const std::string& detail) {
    checked = true;
    passed = passed && ok;
    lines.push_back(std::string(ok ? "PASS " : "FAIL ") + name + ": " + detail);
  }
};

struct Context {
  const Config& cfg;
  std::ostream& artifact;
  std::ostream& err;
  bool assert_on = false;
  Verdict verdict;
};

void dump_json(std::ostream& os, const Json& j, int indent) {
  const std::string pad(indent, ' '), inner(indent + 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << inner << Json(it.key()).dump() << ": ";
        dump_json(os, it.value(), indent + 2);
      }
      os << "\n" << pad << "}";
      return;
    }
    case Json::value_t::array: {
      // short numeric arrays stay on one line
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (flat ? ", " : ",");
        first = false;
        if (!flat) os << "\n" << inner;
        dump_json(os, e, indent + 2);
      }
      if (!flat) os << "\n" << pad;
      os << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

void write_json(std::ostream& os, const Json& j) {
  dump_json(os, j, 0);
  os << "\n";
}

[[noreturn]] void bad_value(const Config::Entry& e, const std::string& what) {
  throw ParseError(e.file + ": " + what + " '" + e.value + "'", e.line, e.column);
}

std::vector<double> get_list(const Config& cfg, const std::string& key, std::vector<double> fallback,
                             std::size_t count) {
  const auto it = cfg.entries().find(key);
  if (it == cfg.entries().end()) return fallback;
  std::vector<double> out;
  std::string token;
  std::stringstream ss(it->second.value);
  while (std::getline(ss, token, ',')) {
    const auto b = token.find_first_not_of(" \t"), e = token.find_last_not_of(" \t");
    if (b == std::string::npos) bad_value(it->second, "empty list element in " + key);
    const std::string t = token.substr(b, e - b + 1);
    if (t == "inf" || t == "+inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    if (t == "-inf") {
      out.push_back(-std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) bad_value(it->second, "invalid number in " + key);
    } catch (const std::logic_error&) {
      bad_value(it->second, "invalid number in " + key);
    }
  }
  if (out.size() != count) bad_value(it->second, "expected " + std::to_string(count) + " numbers for " + key + ", got");
  return out;
}

Expr get_expr(const Config& cfg, const std::string& key, const std::string& fallback) {
  const auto it = cfg.entries().find(key);
  if (it == cfg.entries().end()) return Expr::parse(fallback);
  return Expr::parse(it->second.value, std::max(it->second.line, 1), it->second.column - 1);
}

std::string get_choice(const Config& cfg, const std::string& key, const std::string& fallback,
                       const std::vector<std::string>& allowed) {
  const std::string v = cfg.get_string(key, fallback);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
    bad_value(cfg.entries().at(key), "expected one of " + list + " for " + key + ", got");
  }
  return v;
}

/// Resolves a path value relative to the file it was read from.
fs::path get_path(const Config& cfg, const std::string& key) {
  const auto& e = cfg.entries().at(key);
  fs::path p(e.value);
  if (p.is_relative() && e.file != "<command line>" && e.file != "<string>") p = fs::path(e.file).parent_path() / p;
  return p;
}

int positive_grid(const Config& cfg, int fallback) {
  const long n = cfg.get_long("grid", fallback);
  if (n < 4 || n > 4096) throw PreconditionError("grid must lie in [4, 4096], got " + std::to_string(n));
  return static_cast<int>(n);
}

double positive_tol(const Config& cfg, double fallback) {
  const double t = cfg.get_double("tol", fallback);
  if (!(t > 0)) throw PreconditionError("tol must be positive");
  return t;
}

Domain read_domain(const Config& cfg, const Domain& fallback) {
  Domain d = fallback;
  const auto box = get_list(cfg, "domain", {d.x0, d.x1, d.y0, d.y1}, 4);
  d.x0 = box[0], d.x1 = box[1], d.y0 = box[2], d.y1 = box[3];
  if (!(d.x1 > d.x0) || !(d.y1 > d.y0)) bad_value(cfg.entries().at("domain"), "empty domain");
  std::string fb = d.periodic_x ? (d.periodic_y ? "xy" : "x") : (d.periodic_y ? "y" : "none");
  const std::string per = get_choice(cfg, "periodic", fb, {"none", "x", "y", "xy"});
  d.periodic_x = per == "x" || per == "xy";
  d.periodic_y = per == "y" || per == "xy";
  return d;
}

struct MetricDefaults {
  const char *E, *F, *G;
  Domain domain;
  int grid;
};

/// Metric from `metric.file` (grid CSV) or from `metric.E/F/G` expressions on `domain`;
/// `derivatives = grid` replaces a closed-form metric by its samples.
MetricPatch read_metric(const Config& cfg, const MetricDefaults& def) {
  if (cfg.has("metric.file")) {
    std::ifstream in(get_path(cfg, "metric.file"));
    if (!in) throw PreconditionError("cannot open metric file " + get_path(cfg, "metric.file").string());
    return read_metric_csv(in);
  }
  const Domain d = read_domain(cfg, def.domain);
  const int n = positive_grid(cfg, def.grid);
  const ExprMetric m{get_expr(cfg, "metric.E", def.E), get_expr(cfg, "metric.F", def.F),
                     get_expr(cfg, "metric.G", def.G)};
  MetricPatch patch = MetricPatch::from_expressions(d, m, n, n);
  if (get_choice(cfg, "derivatives", "exact", {"exact", "grid"}) == "grid") patch = patch.sampled();
  return patch;
}

Json vec_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Json mat_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Json complex_json(const std::complex<double>& z) { return Json::array({z.real(), z.imag()}); }

std::string fmt(double v) { return format_double(v); }

// ---- subcommands -----------------------------------------------------------------

void curvature_map(Context& c) {
  const MetricPatch patch = read_metric(c.cfg, {"2*x*y^2", "0.5", "0", Domain{0, 1, 0, 1, false, false}, 41});
  const GridArray K = curvature_field(patch);
  write_grid_csv(c.artifact, patch.grid(), {"K"}, {&K});
  if (!c.assert_on) return;
  const GridSpec& g = patch.grid();
  if (c.cfg.has("expect.K")) {
    const Expr expect = get_expr(c.cfg, "expect.K", "0");
    const bool exact = patch.has_expressions();
    const double tol = positive_tol(c.cfg, exact ? 1e-8 : 1e-4);
    double worst = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Vec2 p = g.point(i, j);
        worst = std::max(worst, std::abs(K(i, j) - expect(p.x(), p.y())));
      }
    c.verdict.check("curvature matches expect.K", worst < tol, "max error " + fmt(worst) + ", tol " + fmt(tol));
  } else {
    c.verdict.check("curvature finite", K.isFinite().all(), "all nodes");
  }
}

void lightlike_fields(Context& c) {
  const MetricPatch patch = read_metric(
      c.cfg, {"0.1*sin(2*pi*y)", "1", "0.1*sin(2*pi*(x+y))", Domain::unit_torus(), 64});
  const LineField f0 = lightlike_field(patch, 0), f1 = lightlike_field(patch, 1);
  write_grid_csv(c.artifact, patch.grid(), {"angle0", "angle1"}, {&f0.angle, &f1.angle});
  if (!c.assert_on) return;
  const GridSpec& g = patch.grid();
  const auto jets = patch.node_jets();
  double worst = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Mat2& h = jets[i + g.nx * j].g;
      for (const LineField* f : {&f0, &f1}) {
        const Vec2 v = f->direction(i, j);
        worst = std::max(worst, std::abs(v.dot(h * v)) / h.norm());
      }
    }
  const double tol = positive_tol(c.cfg, 1e-10);
  c.verdict.check("fields are null", worst < tol, "max |h(v,v)|/|h| " + fmt(worst) + ", tol " + fmt(tol));
  c.verdict.check("fields are continuous", f0.smooth && f1.smooth,
                  std::string("family 0 ") + (f0.smooth ? "smooth" : "jumps") + ", family 1 " +
                      (f1.smooth ? "smooth" : "jumps"));
}

void gauss_bonnet(Context& c) {
  const MetricPatch patch = read_metric(c.cfg, {"0", "1", "x*(1-x)", Domain{0, 1, 0, 1, false, true}, 64});
  const auto s1 = get_list(c.cfg, "annulus.seed1", {1, 0.3}, 2);
  const auto s2 = get_list(c.cfg, "annulus.seed2", {0, 0.3}, 2);
  const long family = c.cfg.get_long("annulus.family", 1);
  if (family != 0 && family != 1) throw PreconditionError("annulus.family must be 0 or 1");
  AnnulusQuadrature q;
  q.periodic_nodes = static_cast<int>(c.cfg.get_long("annulus.periodic_nodes", q.periodic_nodes));
  q.transverse_nodes = static_cast<int>(c.cfg.get_long("annulus.transverse_nodes", q.transverse_nodes));
  const auto A = LightlikeAnnulus::build(patch, {s1[0], s1[1]}, {s2[0], s2[1]}, static_cast<int>(family));
  const GaussBonnetReport r = annulus_gauss_bonnet(A, q);
  Json leaves = Json::array();
  for (const LeafTrace* l : {&A.gamma1, &A.gamma2}) {
    Json j;
    j["start"] = vec_json(l->nodes.front().p);
    j["period"] = l->ret ? l->ret->period : 0.0;
    j["closing_error"] = l->ret ? l->ret->closing_error : 0.0;
    leaves.push_back(j);
  }
  Json out;
  out["integral"] = r.integral;
  out["log_ratio"] = r.log_ratio;
  out["lambda1"] = r.lambda1;
  out["lambda2"] = r.lambda2;
  out["residual"] = r.residual();
  out["leaves"] = leaves;
  write_json(c.artifact, out);
  if (!c.assert_on) return;
  const double tol = positive_tol(c.cfg, 1e-3);
  c.verdict.check("integral equals log holonomy ratio", r.residual() < tol,
                  "residual " + fmt(r.residual()) + ", tol " + fmt(tol));
}

void flatness_scan(Context& c) {
  const int n = positive_grid(c.cfg, 32);
  auto P = [](const char* s) { return Expr::parse(s); };
  const std::vector<NamedMetric> ms{
      {"flat", MetricPatch::from_expressions(Domain::unit_torus(), {P("0"), P("0.5"), P("0")}, n, n)},
      {"null-chart", MetricPatch::from_expressions(Domain::unit_torus(), {P("0"), P("1"), P("0.2*sin(2*pi*x)")}, n, n)},
      {"perturbed", MetricPatch::from_expressions(Domain::unit_torus(),
                                                  {P("0.1*sin(2*pi*y)"), P("1"), P("0.1*sin(2*pi*(x+y))")}, n, n)},
  };
  ConstancyOptions o;
  o.seeds = static_cast<int>(c.cfg.get_long("flatness.seeds", 8));
  if (o.seeds < 1) throw PreconditionError("flatness.seeds must be positive");
  const FlatnessReport rep = flatness_experiment(ms, o);
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    Json j;
    j["metric"] = r.metric_id;
    j["deviation_family0"] = r.dev_family0;
    j["deviation_family1"] = r.dev_family1;
    j["max_abs_K"] = r.max_abs_K;
    j["total_curvature"] = r.gb_residual;
    rows.push_back(j);
  }
  Json out;
  out["rows"] = rows;
  out["constant"] = rep.constant;
  out["violations"] = rep.violations;
  write_json(c.artifact, out);
  if (!c.assert_on) return;
  c.verdict.check("flat iff constant curvature along leaves", rep.violations.empty(),
                  std::to_string(rep.violations.size()) + " violations");
}

void anosov_rates(Context& c) {
  AnosovSystem sys;
  sys.epsilon = c.cfg.get_double("eps", 0.1);
  sys.profile = get_expr(c.cfg, "anosov.profile", "sin(2*pi*x)");
  sys.n_max = static_cast<int>(c.cfg.get_long("nmax", 8));
  sys.grid = positive_grid(c.cfg, 256);
  sys.mode = get_choice(c.cfg, "anosov.mode", "exact", {"exact", "spectral"}) == "exact" ? DerivativeMode::Exact
                                                                                        : DerivativeMode::Spectral;
  const auto rows = anosov_experiment(sys);
  write_rate_csv(c.artifact, rows);
  if (!c.assert_on) return;
  if (sys.n_max < 3) throw PreconditionError("--assert needs nmax >= 3");
  const double tol = positive_tol(c.cfg, 0.05);
  const RateVerdict v = check_rates(rows, 3, sys.n_max, tol);
  c.verdict.check("C0 ratios near lambda^-2", v.c0, "worst relative deviation " + fmt(v.worst_c0));
  c.verdict.check("C1 ratios near lambda^-1", v.c1, "worst relative deviation " + fmt(v.worst_c1));
  c.verdict.check("C2 distance stays bounded away from 0", v.c2, "max/min " + fmt(v.c2_band));
}

void as_field(Context& c) {
  const int n = positive_grid(c.cfg, 32);
  const GridSpec grid{Domain::unit_torus(), n, n};
  const Mat2 g = anosov_form();
  MetricPatch limit =
      MetricPatch::from_expressions(Domain::unit_torus(), {Expr(g(0, 0)), Expr(g(0, 1)), Expr(g(1, 1))}, n, n);
  TorusDiffeo phi = TorusDiffeo::linear(anosov_matrix());
  if (c.cfg.has("asfield.psi.dx") || c.cfg.has("asfield.psi.dy")) {
    // conjugate by ψ = Id + (dx, dy): the field of ψ⁻¹Aψ is null for ψ*g_A
    const TorusDiffeo psi = TorusDiffeo::with_displacement(IMat2::Identity(), get_expr(c.cfg, "asfield.psi.dx", "0"),
                                                           get_expr(c.cfg, "asfield.psi.dy", "0"));
    phi = TorusDiffeo::conjugate(phi, psi);
    limit = pullback(limit, psi);
  }
  const int nmax = static_cast<int>(c.cfg.get_long("nmax", 20));
  const ASFieldReport rep = as_field_estimate(limit, phi, nmax, grid);
  write_grid_csv(c.artifact, grid, {"angle"}, {&rep.field.angle});
  c.err << "as-field: n_used " << rep.n_used << ", min_top_stretch " << fmt(rep.min_top_stretch)
        << ", null_residual " << fmt(rep.null_residual) << ", geodesic_residual " << fmt(rep.geodesic_residual)
        << "\n";
  if (!c.assert_on) return;
  const double tol = positive_tol(c.cfg, 1e-8);
  const double gtol = c.cfg.get_double("asfield.geodesic_tol", 1e-6);
  c.verdict.check("field is null for the limit metric", rep.null_residual < tol,
                  "residual " + fmt(rep.null_residual) + ", tol " + fmt(tol));
  c.verdict.check("integral curves are geodesics", rep.geodesic_residual < gtol,
                  "residual " + fmt(rep.geodesic_residual) + ", tol " + fmt(gtol));
}

void moduli_orbit(Context& c) {
  std::string expect_default;
  QuadraticForm2 q;
  const std::string preset = get_choice(c.cfg, "moduli.preset", "generic", {"generic", "rational", "anosov", "custom"});
  if (preset == "generic") {
    q = QuadraticForm2::from_endpoints(std::numbers::pi - 3, std::numbers::e);
    expect_default = "generic";
  } else if (preset == "rational") {
    q.Q << 0, 1, 1, 0;
    expect_default = "rational";
  } else if (preset == "anosov") {
    q.Q = anosov_form();
    expect_default = "fixed";
  }
  if (c.cfg.has("moduli.endpoints")) {
    const auto e = get_list(c.cfg, "moduli.endpoints", {}, 2);
    q = QuadraticForm2::from_endpoints(e[0], e[1]);
    expect_default.clear();
  } else if (c.cfg.has("moduli.form")) {
    const auto f = get_list(c.cfg, "moduli.form", {}, 3);
    q.Q << f[0], f[1], f[1], f[2];
    expect_default.clear();
  } else if (preset == "custom") {
    throw PreconditionError("moduli.preset = custom needs moduli.endpoints or moduli.form");
  }
  if (!(q.Q.determinant() < 0)) throw SignatureError("form is not Lorentzian");

  const int radius = static_cast<int>(c.cfg.get_long("nmax", 8));
  if (radius < 1 || radius > 16) throw PreconditionError("word radius (nmax) must lie in [1, 16]");
  ErgodicityOptions eo;
  eo.budget = c.cfg.get_long("budget", eo.budget);
  eo.seed = static_cast<std::uint64_t>(c.cfg.get_long("seed", static_cast<long>(eo.seed)));
  eo.bins = static_cast<int>(c.cfg.get_long("moduli.bins", eo.bins));
  eo.horizon = c.cfg.get_double("moduli.horizon", eo.horizon);
  if (eo.budget < 1 || eo.bins < 1 || !(eo.horizon > 0)) throw PreconditionError("invalid sampling options");

  const SlopePair sp = slopes(q);
  const OrbitProbe probe = orbit_probe(q, radius);
  const ErgodicityReport erg = ergodicity_statistics(q, eo);

  Json out;
  out["form"] = mat_json(q.Q);
  Json sl = Json::array();
  for (int k = 0; k < 2; ++k) {
    Json s;
    s["slope"] = sp.slope[k];
    s["rational"] = sp.certificate[k].rational;
    s["continued_fraction"] = sp.certificate[k].terms;
    s["convergent"] = Json::array({sp.certificate[k].p, sp.certificate[k].q});
    sl.push_back(s);
  }
  out["slopes"] = sl;
  const ModularGeodesic geo = to_modular_geodesic(q);
  out["geodesic_endpoints"] = Json::array({geo.end[0], geo.end[1]});
  Json table = Json::array();
  for (const auto& [L, d] : probe.table) table.push_back(Json{{"radius", L}, {"min_displacement", d}});
  out["orbit"] = {{"table", table},
                  {"best_word", probe.best.letters},
                  {"best_matrix", mat_json(probe.best.matrix.cast<double>())}};
  bool exact_fixed = false;
  if (preset == "anosov" && !c.cfg.has("moduli.endpoints") && !c.cfg.has("moduli.form")) {
    exact_fixed = true;
    for (const QSqrt5& e : exact_displacement(probe.best.matrix, anosov_form_exact())) exact_fixed &= e.is_zero();
    out["orbit"]["exact_stabilizer"] = exact_fixed;
  }
  Json counts = Json::array(), expected = Json::array();
  for (int i = 0; i < erg.bins; ++i) {
    Json rc = Json::array(), re = Json::array();
    for (int j = 0; j < erg.bins; ++j) {
      rc.push_back(erg.counts[i * erg.bins + j]);
      re.push_back(erg.expected[i * erg.bins + j]);
    }
    counts.push_back(rc);
    expected.push_back(re);
  }
  out["histogram"] = {{"bins", erg.bins},     {"samples", erg.samples},
                      {"seed", eo.seed},      {"cells_in_domain", erg.cells_in_domain},
                      {"covered", erg.covered}, {"coverage", erg.coverage},
                      {"chi_square", erg.chi_square}, {"counts", counts},
                      {"expected", expected}};
  write_json(c.artifact, out);
  if (!c.assert_on) return;
  const std::string expect = get_choice(c.cfg, "moduli.expect", expect_default.empty() ? "generic" : expect_default,
                                        {"generic", "rational", "fixed"});
  if (!c.cfg.has("moduli.expect") && expect_default.empty())
    throw PreconditionError("--assert on a custom form needs moduli.expect");
  const double dmin = probe.table.back().second;
  if (expect == "generic") {
    const double need = c.cfg.get_double("moduli.coverage", 0.95);
    c.verdict.check("fundamental-domain coverage", erg.coverage >= need,
                    std::to_string(erg.covered) + "/" + std::to_string(erg.cells_in_domain) + " cells, coverage " +
                        fmt(erg.coverage));
  } else if (expect == "rational") {
    c.verdict.check("orbit stays discrete", dmin >= 1.0, "min displacement " + fmt(dmin));
  } else {
    const double tol = positive_tol(c.cfg, 1e-9);
    c.verdict.check("stabilizer word found", dmin <= tol, "min displacement " + fmt(dmin) + " (" +
                                                             probe.best.letters + ")");
    if (out["orbit"].contains("exact_stabilizer"))
      c.verdict.check("stabilizer is exact in Q(sqrt5)", exact_fixed, exact_fixed ? "residual 0" : "nonzero residual");
  }
}

Json classification_json(const Classification& cl) {
  Json j;
  j["verdict"] = to_string(cl.verdict);
  Json ev = Json::array();
  for (const auto& z : cl.op.eigenvalues) ev.push_back(complex_json(z));
  j["eigenvalues"] = ev;
  Json cls = Json::array();
  for (const auto& k : cl.op.clusters)
    cls.push_back({{"value", complex_json(k.value)}, {"algebraic", k.algebraic}, {"geometric", k.geometric}});
  j["clusters"] = cls;
  j["diagonalizable"] = cl.op.diagonalizable;
  j["self_adjoint_error"] = cl.op.self_adjoint_error;
  return j;
}

bool integral(const Mat3& H) {
  for (int i = 0; i < 9; ++i) {
    const double v = H.data()[i];
    if (v != std::round(v) || std::abs(v) > 1e15) return false;
  }
  return true;
}

QMat3 to_rational(const Mat3& H) {
  QMat3 q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q[i][j] = BigRational(boost::multiprecision::cpp_int(static_cast<long long>(H(i, j))));
  return q;
}

void classify_psl2r(Context& c) {
  Json out;
  if (c.cfg.has("psl2r.sequence")) {
    const auto p = get_list(c.cfg, "psl2r.sequence", {}, 3);
    const long nmax = c.cfg.get_long("nmax", 100);
    const long n0 = c.cfg.get_long("psl2r.nmin", 2);
    if (n0 < 1 || nmax < n0) throw PreconditionError("need 1 <= psl2r.nmin <= nmax");
    std::vector<long> ns;
    for (long n = n0; n <= nmax; ++n) ns.push_back(n);
    const auto rows = sequence_experiment(p[0], p[1], p[2], ns);
    Json jr = Json::array();
    for (const auto& r : rows) {
      Json j;
      j["n"] = r.n == 0 ? Json("inf") : Json(r.n);
      j["lorentzian"] = r.lorentzian;
      j["verdict"] = r.lorentzian ? Json(to_string(r.verdict)) : Json(nullptr);
      if (r.exact_available) j["exact_verdict"] = to_string(r.exact_verdict);
      Json ev = Json::array();
      for (const auto& z : r.eigenvalues) ev.push_back(complex_json(z));
      j["eigenvalues"] = ev;
      j["distance"] = r.distance;
      j["eigengap"] = r.eigengap;
      jr.push_back(j);
    }
    out["parameters"] = p;
    out["rows"] = jr;
    const Mat3 Hinf = h_sequence(p[0], p[1], p[2], 0);
    std::optional<CommonPlane> plane;
    if (classify(Hinf).verdict == IsometryVerdict::LeftOnly) {
      plane = common_lightlike_plane(Hinf);
      out["limit_plane"] = {{"normal", Json::array({plane->normal[0], plane->normal[1], plane->normal[2]})},
                            {"det_H", plane->det_H},
                            {"det_K", plane->det_K}};
    }
    write_json(c.artifact, out);
    if (!c.assert_on) return;
    std::string bad;
    bool agree = true;
    for (const auto& r : rows) {
      if (r.n == 0) continue;
      if (!r.lorentzian || r.verdict != IsometryVerdict::FullTimesZ2)
        bad += (bad.empty() ? "" : ",") + std::to_string(r.n);
      if (r.lorentzian && r.exact_available && r.exact_verdict != r.verdict) agree = false;
    }
    c.verdict.check("every H_n is FullTimesZ2", bad.empty(), bad.empty() ? "all rows" : "failing n = " + bad);
    const auto& lim = rows.back();
    c.verdict.check("limit is LeftOnly", lim.lorentzian && lim.verdict == IsometryVerdict::LeftOnly,
                    lim.lorentzian ? to_string(lim.verdict) : "not Lorentzian");
    if (lim.exact_available && lim.exact_verdict != lim.verdict) agree = false;
    c.verdict.check("exact and float lanes agree", agree, agree ? "all rows" : "disagreement");
    const double tol = positive_tol(c.cfg, 1e-10);
    const double dev = plane ? std::max(std::abs(plane->det_H), std::abs(plane->det_K)) : INFINITY;
    c.verdict.check("common plane degenerate for H_inf and K", dev < tol, "max |det| " + fmt(dev));
    return;
  }

  const Mat3 H = c.cfg.has("psl2r.matrix") ? [&] {
    try {
      return parse_matrix3(c.cfg.get_string("psl2r.matrix", ""));
    } catch (const ParseError& e) {
      bad_value(c.cfg.entries().at("psl2r.matrix"), e.what());
    }
  }()
                                           : killing_matrix();
  const Classification cl = classify(H);
  out["matrix"] = mat_json(H);
  out["float"] = classification_json(cl);
  std::optional<IsometryVerdict> exact;
  if (integral(H)) {
    exact = classify_exact(to_rational(H)).verdict;
    out["exact_verdict"] = to_string(*exact);
  }
  if (cl.verdict == IsometryVerdict::LeftOnly) {
    const CommonPlane pl = common_lightlike_plane(H);
    out["plane"] = {{"normal", Json::array({pl.normal[0], pl.normal[1], pl.normal[2]})},
                    {"det_H", pl.det_H},
                    {"det_K", pl.det_K}};
  }
  write_json(c.artifact, out);
  if (!c.assert_on) return;
  if (!c.cfg.has("psl2r.expect")) throw PreconditionError("--assert needs psl2r.expect");
  const std::string want =
      get_choice(c.cfg, "psl2r.expect", "", {"FullTimesZ2", "LeftOnly", "Biinvariant", "Unclassified"});
  c.verdict.check("verdict", to_string(cl.verdict) == want, to_string(cl.verdict));
  if (exact) c.verdict.check("exact lane agrees", *exact == cl.verdict, to_string(*exact));
}

MatX random_lorentzian(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> U(0.5, 2.0), N(-1, 1);
  MatX Q = MatX::NullaryExpr(m, m, [&] { return N(rng); }).householderQr().householderQ();
  Eigen::VectorXd d(m);
  d[0] = -U(rng);
  for (int i = 1; i < m; ++i) d[i] = U(rng);
  return Q * d.asDiagonal() * Q.transpose();
}

void reduce_forms(Context& c) {
  const long pairs = c.cfg.get_long("budget", 1000);
  const double size = c.cfg.get_double("eps", 1e-2);
  const std::string dims = get_choice(c.cfg, "reduce.dim", "mixed", {"2", "3", "mixed"});
  if (pairs < 1 || !(size > 0)) throw PreconditionError("need budget >= 1 and eps > 0");
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.cfg.get_long("seed", 1)));
  std::uniform_real_distribution<double> N(-1, 1), S(0, 1);
  double worst_res = 0, worst_c = 0;
  Json rows = Json::array();
  for (long t = 0; t < pairs; ++t) {
    const int m = dims == "mixed" ? 2 + static_cast<int>(t % 2) : std::stoi(dims);
    const MatX H = random_lorentzian(rng, m);
    MatX E = MatX::NullaryExpr(m, m, [&] { return N(rng); });
    E = 0.5 * (E + E.transpose()).eval();
    const MatX Hn = H + (size * S(rng) / op_norm(E)) * E;
    const Reduction r = reduce_to_base(H, Hn);
    const double bound = op_norm(r.M - MatX::Identity(m, m)) / op_norm(Hn - H);
    worst_res = std::max(worst_res, r.residual);
    worst_c = std::max(worst_c, bound);
    rows.push_back(Json::array({m, op_norm(Hn - H), r.residual, bound}));
  }
  Json out;
  out["pairs"] = pairs;
  out["max_perturbation"] = size;
  out["max_residual"] = worst_res;
  out["max_constant"] = worst_c;
  out["columns"] = Json::array({"dim", "perturbation", "residual", "constant"});
  out["rows"] = rows;
  write_json(c.artifact, out);
  if (!c.assert_on) return;
  const double tol = positive_tol(c.cfg, 1e-12);
  c.verdict.check("reduction residual", worst_res < tol, "max " + fmt(worst_res) + ", tol " + fmt(tol));
  c.verdict.check("continuity constant", worst_c <= 5.0, "max " + fmt(worst_c) + ", bound 5");
}

const std::map<std::string, std::pair<std::string, std::function<void(Context&)>>>& commands() {
  static const std::map<std::string, std::pair<std::string, std::function<void(Context&)>>> table{
      {"curvature-map", {"Gaussian curvature on the metric grid (CSV x,y,K)", curvature_map}},
      {"lightlike-fields", {"Null direction angles on the metric grid (CSV)", lightlike_fields}},
      {"gauss-bonnet", {"Curvature integral vs. boundary holonomy of a lightlike annulus (JSON)", gauss_bonnet}},
      {"flatness-scan", {"Leafwise curvature constancy vs. flatness on tori (JSON)", flatness_scan}},
      {"anosov-rates", {"C^k distances of Anosov pullbacks from the invariant form (CSV)", anosov_rates}},
      {"as-field", {"Asymptotically stable direction field (CSV x,y,angle)", as_field}},
      {"moduli-orbit", {"Modular orbit probe and fundamental-domain histogram (JSON)", moduli_orbit}},
      {"classify-psl2r", {"Isometry class of a left-invariant metric on PSL(2,R) (JSON)", classify_psl2r}},
      {"reduce-forms", {"Residuals of reducing perturbed Lorentzian forms to the base form (JSON)", reduce_forms}},
  };
  return table;
}

struct Flags {
  int grid = 0, nmax = 0;
  long budget = 0, seed = 0;
  double tol = 0, eps = 0;
  bool assert_on = false;
  std::string out, config;
  std::vector<std::string> sets;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--grid", f.grid, "Grid size per axis");
  sub->add_option("--nmax", f.nmax, "Largest iterate / word radius / sequence index");
  sub->add_option("--budget", f.budget, "Sample or pair budget");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--tol", f.tol, "Acceptance tolerance");
  sub->add_option("--eps", f.eps, "Perturbation size");
  sub->add_flag("--assert", f.assert_on, "Check acceptance thresholds; exit 3 on failure");
  sub->add_option("--out", f.out, "Output file (default: stdout)");
  sub->add_option("--config", f.config, "key = value configuration file");
  sub->add_option("--set", f.sets, "Override a configuration key (key=value)")->take_all();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical experiments on Lorentzian surfaces and PSL(2,R)", "lorentz"};
  app.require_subcommand(1, 1);
  Flags flags;
  std::map<CLI::App*, std::string> names;
  for (const auto& [name, cmd] : commands()) {
    CLI::App* sub = app.add_subcommand(name, cmd.first);
    add_flags(sub, flags);
    names[sub] = name;
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  std::string name;
  for (auto* sub : app.get_subcommands()) name = names.at(sub);

  try {
    Config cfg = flags.config.empty() ? Config{} : Config::load(flags.config);
    for (const auto& s : flags.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + s + "'", 0, 1);
      cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    auto* sub = app.get_subcommands().front();
    if (sub->count("--grid")) cfg.set("grid", std::to_string(flags.grid));
    if (sub->count("--nmax")) cfg.set("nmax", std::to_string(flags.nmax));
    if (sub->count("--budget")) cfg.set("budget", std::to_string(flags.budget));
    if (sub->count("--seed")) cfg.set("seed", std::to_string(flags.seed));
    if (sub->count("--tol")) cfg.set("tol", format_double(flags.tol));
    if (sub->count("--eps")) cfg.set("eps", format_double(flags.eps));
    if (flags.assert_on) cfg.set("assert", "true");
    if (sub->count("--out")) cfg.set("out", flags.out);

    std::ostringstream artifact;
    Context ctx{cfg, artifact, err, cfg.get_bool("assert", false), {}};
    commands().at(name).second(ctx);

    const std::string path = cfg.get_string("out", "");
    if (path.empty()) {
      out << artifact.str();
    } else {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw PreconditionError("cannot write " + path);
      f << artifact.str();
    }
    for (const auto& l : ctx.verdict.lines) err << l << "\n";
    return ctx.verdict.passed ? kOk : kAssertFailed;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kPrecondition;
  }
}

}  // namespace lorentz::cli
