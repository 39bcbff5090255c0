#include "lorentz/lightlike.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

namespace lorentz {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

void validate_leaf(const MetricPatch& m, const LeafTrace& leaf) {
  if (!leaf.closed()) throw PreconditionError("annulus boundary leaf is not closed");
  for (const auto& n : leaf.nodes) {
    const Mat2 g = m.jet_extended(n.p).g;
    if (std::abs(n.v.dot(g * n.v)) > 1e-8 * g.norm() * n.v.squaredNorm())
      throw PreconditionError("annulus boundary leaf is not lightlike");
  }
}

int closing_axis(const Domain& d, const LeafTrace& leaf) {
  const Vec2 s = leaf.ret->shift;
  for (int a = 0; a < 2; ++a)
    if (d.periodic(a) && std::abs(std::abs(s[a]) - d.length(a)) < 1e-9 && std::abs(s[1 - a]) < 1e-9) return a;
  throw PreconditionError("annulus boundary leaf must close once around a periodic axis");
}

/// Transverse coordinates where the leaf meets {p[axis] ≡ s mod L}.
void crossings(const LeafTrace& leaf, int axis, double s, double L, std::vector<double>& out) {
  const int other = 1 - axis;
  for (std::size_t i = 0; i + 1 < leaf.nodes.size(); ++i) {
    const PathNode &a = leaf.nodes[i], &b = leaf.nodes[i + 1];
    const double ca = a.p[axis], cb = b.p[axis];
    const double lo = std::min(ca, cb), hi = std::max(ca, cb);
    // half-open [lo, hi) so a crossing exactly at a node is counted once
    for (double k = std::ceil((lo - s) / L); s + k * L < hi; k += 1) {
      const double target = s + k * L;
      double t0 = a.t, t1 = b.t;
      const double sgn = cb >= ca ? 1 : -1;
      for (int it = 0; it < 80; ++it) {
        const double tm = 0.5 * (t0 + t1);
        if (sgn * (leaf.position(tm)[axis] - target) < 0) t0 = tm;
        else t1 = tm;
      }
      out.push_back(leaf.position(0.5 * (t0 + t1))[other]);
    }
  }
}

}  // namespace

LightlikeAnnulus LightlikeAnnulus::build(const MetricPatch& patch, const Vec2& seed1, const Vec2& seed2, int family,
                                         const TraceOptions& opt) {
  const Domain& d = patch.domain();
  const double budget = 4 * std::max(d.length(0), d.length(1));
  auto trace = [&](const Vec2& seed, const std::optional<Vec2>& hint) {
    TraceOptions o = opt;
    o.direction_hint = hint;
    LeafTrace t = trace_leaf(patch, seed, family, budget, o);
    if (!t.closed()) throw PreconditionError("annulus boundary leaf is not closed");
    const int ax = closing_axis(d, t);
    if (t.ret->shift[ax] < 0) {
      o.direction_hint = -t.nodes.front().v;
      t = trace_leaf(patch, seed, family, budget, o);
    }
    validate_leaf(patch, t);
    return t;
  };
  LeafTrace l1 = trace(seed1, std::nullopt);
  LeafTrace l2 = trace(seed2, l1.nodes.front().v);
  const int ax = closing_axis(d, l1);
  if (closing_axis(d, l2) != ax) throw PreconditionError("boundary leaves close around different axes");
  if (seed1[1 - ax] > seed2[1 - ax]) std::swap(l1, l2);
  return {patch, std::move(l1), std::move(l2), ax};
}

GaussBonnetReport annulus_gauss_bonnet(const LightlikeAnnulus& a, const AnnulusQuadrature& q) {
  validate_leaf(a.patch, a.gamma1);
  validate_leaf(a.patch, a.gamma2);
  const Domain& d = a.patch.domain();
  const int ax = a.periodic_axis, tr = 1 - ax;
  const double L = d.length(ax);
  GaussBonnetReport r;
  double total = 0;
  std::vector<double> cuts;
  for (int j = 0; j < q.periodic_nodes; ++j) {
    const double s = d.lo(ax) + L * j / q.periodic_nodes;
    cuts.clear();
    crossings(a.gamma1, ax, s, L, cuts);
    crossings(a.gamma2, ax, s, L, cuts);
    std::sort(cuts.begin(), cuts.end());
    if (cuts.size() % 2 != 0) throw Error("boundary leaves do not bound an annulus on this chart");
    double line = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); k += 2) {
      auto f = [&](double b) {
        Vec2 p;
        p[ax] = s;
        p[tr] = b;
        const MetricJet jet = a.patch.jet(p);
        return curvature(jet) * std::sqrt(-jet.g.determinant());
      };
      line += boost::math::quadrature::gauss<double, 24>::integrate(f, cuts[k], cuts[k + 1]);
    }
    total += line * L / q.periodic_nodes;
  }
  r.integral = total;
  r.lambda1 = leaf_holonomy(a.patch, a.gamma1);
  r.lambda2 = leaf_holonomy(a.patch, a.gamma2);
  r.log_ratio = std::log(std::abs(r.lambda1 / r.lambda2));
  return r;
}

// ---- connection form --------------------------------------------------------

GridArray ConnectionFrame::d_omega() const {
  return differentiate(grid, omega_y, 0, 1) - differentiate(grid, omega_x, 1, 1);
}

double ConnectionFrame::curvature_residual() const { return (d_omega() - K * vol).abs().maxCoeff(); }

ConnectionFrame connection_form(const MetricPatch& patch, const GridSpec& region, int family,
                                const std::optional<Expr>& rho) {
  if (family != 0 && family != 1) throw PreconditionError("family must be 0 or 1");
  ConnectionFrame cf;
  cf.grid = region;
  const int nx = region.nx, ny = region.ny;
  for (GridArray* a : {&cf.Xx, &cf.Xy, &cf.X0x, &cf.X0y, &cf.omega_x, &cf.omega_y, &cf.K, &cf.vol}) a->resize(nx, ny);
  std::vector<Vec2> prev_row(nx);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 p = region.point(i, j);
      const MetricJet jet = patch.jet(p);
      const Mat2& g = jet.g;
      const LightlikePair lp = lightlike_directions(g);
      // family by continuity with the neighbour already visited
      Vec2 X;
      int idx = family;
      if (i > 0 || j > 0) {
        const Vec2 ref = i > 0 ? Vec2(cf.Xx(i - 1, j), cf.Xy(i - 1, j)) : prev_row[0];
        idx = std::abs(lp.direction(0).dot(ref)) >= std::abs(lp.direction(1).dot(ref)) ? 0 : 1;
        X = lp.direction(idx);
        if (X.dot(ref) < 0) X = -X;
      } else {
        X = lp.direction(idx);
      }
      Vec2 n = lp.direction(1 - idx);
      const double hxn = X.dot(g * n);
      if (std::abs(hxn) < 1e-14) throw PreconditionError("lightlike frame normalisation is singular");
      Vec2 X0 = n / hxn;

      // ∂ᵢθ from implicit differentiation of E c² + 2F cs + G s² = 0
      const double c = X.x(), s = X.y();
      const double Qt = 2 * (-g(0, 0) * c * s + g(0, 1) * (c * c - s * s) + g(1, 1) * s * c);
      if (std::abs(Qt) < 1e-14) throw PreconditionError("lightlike field is not differentiable here");
      const Christoffel G = christoffel(jet);
      const Vec2 Xperp(-s, c);
      double om[2];
      for (int a = 0; a < 2; ++a) {
        const Mat2& dg = jet.d(a);
        const double Qa = dg(0, 0) * c * c + 2 * dg(0, 1) * c * s + dg(1, 1) * s * s;
        const double dtheta = -Qa / Qt;
        Vec2 e = Vec2::Zero();
        e[a] = 1;
        const Vec2 nabla = dtheta * Xperp + G.contract(e, X);
        om[a] = nabla.dot(g * X0);
      }
      if (rho) {
        const Jet2 r = rho->jet(p.x(), p.y());
        if (!(r.v > 0)) throw PreconditionError("frame scale must be positive");
        om[0] += r.x / r.v;
        om[1] += r.y / r.v;
        X *= r.v;
        X0 /= r.v;
      }
      cf.Xx(i, j) = X.x();
      cf.Xy(i, j) = X.y();
      cf.X0x(i, j) = X0.x();
      cf.X0y(i, j) = X0.y();
      cf.omega_x(i, j) = om[0];
      cf.omega_y(i, j) = om[1];
      cf.K(i, j) = curvature(jet);
      const double orient = cross(X0, X) > 0 ? 1.0 : -1.0;
      cf.vol(i, j) = orient * std::sqrt(-g.determinant());
      cf.frame_error = std::max({cf.frame_error, std::abs(X.dot(g * X)), std::abs(X0.dot(g * X0)),
                                 std::abs(X.dot(g * X0) - 1)});
      if (i == 0) prev_row[0] = X;
    }
  }
  return cf;
}

// ---- constancy along leaves ----------------------------------------------------

ConstancyReport constancy_deviation(const MetricPatch& patch, const std::function<double(const Vec2&)>& sigma,
                                    int family, const ConstancyOptions& opt) {
  const Domain& d = patch.domain();
  const Vec2 centre(0.5 * (d.x0 + d.x1), 0.5 * (d.y0 + d.y1));
  const Vec2 dc = lightlike_directions(patch, centre).direction(family);
  const int seed_axis = std::abs(dc.x()) >= std::abs(dc.y()) ? 1 : 0;  // transversal runs along this axis
  const double budget = opt.periods * std::max(d.length(0), d.length(1));
  ConstancyReport rep;
  std::optional<Vec2> hint;
  for (int k = 0; k < opt.seeds; ++k) {
    Vec2 seed = centre;
    seed[seed_axis] = d.lo(seed_axis) + d.length(seed_axis) * (k + 0.5) / opt.seeds;
    if (!hint) hint = lightlike_directions(patch, seed).direction(family);
    double lo = sigma(d.wrap(seed)), hi = lo;
    TraceOptions o = opt.trace;
    o.return_derivative = false;
    TraceStop stop = TraceStop::Closed;
    for (int dir = 0; dir < 2; ++dir) {
      o.direction_hint = dir == 0 ? *hint : Vec2(-*hint);
      const LeafTrace t = trace_leaf(patch, seed, family, budget, o);
      for (const auto& n : t.nodes) {
        const double v = sigma(d.wrap(n.p));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (dir == 0) {
        hint = t.nodes.front().v;
        stop = t.stop;
      }
      if (t.closed()) break;  // the whole leaf has been seen
    }
    rep.per_leaf.push_back(hi - lo);
    rep.stops.push_back(stop);
    rep.deviation = std::max(rep.deviation, hi - lo);
  }
  return rep;
}

FlatnessReport flatness_experiment(const std::vector<NamedMetric>& metrics, const ConstancyOptions& opt) {
  FlatnessReport rep;
  for (const auto& nm : metrics) {
    if (!nm.patch.domain().is_torus()) throw PreconditionError("flatness_experiment needs torus metrics");
    FlatnessRow row;
    row.metric_id = nm.id;
    const auto K = [&](const Vec2& p) { return curvature(nm.patch, p); };
    row.dev_family0 = constancy_deviation(nm.patch, K, 0, opt).deviation;
    row.dev_family1 = constancy_deviation(nm.patch, K, 1, opt).deviation;
    row.max_abs_K = curvature_field(nm.patch).abs().maxCoeff();
    row.gb_residual = std::abs(total_curvature(nm.patch));
    const double dev = std::min(row.dev_family0, row.dev_family1);
    if (dev <= 1e-9) {
      if (row.max_abs_K > 1e-6) rep.violations.push_back(nm.id);
    } else {
      rep.constant = std::max(rep.constant, row.max_abs_K / dev);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace lorentz
