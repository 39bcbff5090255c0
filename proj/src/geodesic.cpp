#include "lorentz/geodesic.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

namespace lorentz {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 4>;
constexpr double kDomainSlack = 1e-8;

double extent(const Domain& d) { return std::max(d.length(0), d.length(1)); }

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct GeodesicRhs {
  const MetricPatch* m;
  void operator()(const State& s, State& ds, double /*t*/) const {
    const Christoffel c = christoffel(m->jet_extended({s[0], s[1]}));
    const Vec2 v(s[2], s[3]);
    const Vec2 a = -c.contract(v, v);
    ds = {s[2], s[3], a[0], a[1]};
  }
};

/// Adaptive Dormand–Prince integration of the geodesic flow with dense output.
class GeodesicFlow {
 public:
  GeodesicFlow(const MetricPatch& m, const GeodesicState& s0, const GeodesicOptions& opt)
      : rhs_{&m},
        opt_(opt),
        stepper_(odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>())),
        speed0_(s0.v.norm()) {
    if (!(speed0_ > 0)) throw PreconditionError("geodesic needs a nonzero initial velocity");
    const State x0{s0.p.x(), s0.p.y(), s0.v.x(), s0.v.y()};
    stepper_.initialize(x0, 0.0, 1e-3 * extent(m.domain()) / speed0_);
  }

  /// One adaptive step; throws IncompleteGeodesic on blow-up.
  std::pair<double, double> step() {
    const double t0 = stepper_.current_time();
    try {
      stepper_.do_step(rhs_);
    } catch (const odeint::step_adjustment_error&) {
      throw IncompleteGeodesic(t0);
    }
    const double t1 = stepper_.current_time();
    const State& s = stepper_.current_state();
    const double speed = std::hypot(s[2], s[3]);
    const double dt = stepper_.current_time_step();
    if (!std::isfinite(speed) || speed > opt_.speed_cap * speed0_ || dt < opt_.min_step * (1 + std::abs(t1)))
      throw IncompleteGeodesic(t1);
    return {t0, t1};
  }

  GeodesicState at(double t) const {
    State s;
    stepper_.calc_state(t, s);
    return {{s[0], s[1]}, {s[2], s[3]}};
  }

  double time() const { return stepper_.current_time(); }

 private:
  GeodesicRhs rhs_;
  GeodesicOptions opt_;
  odeint::result_of::make_dense_output<odeint::runge_kutta_dopri5<State>>::type stepper_;
  double speed0_;
};

int substeps(const GeodesicFlow& f, double a, double b, double spacing) {
  const double d = (f.at(b).p - f.at(a).p).norm();
  return std::max(1, static_cast<int>(std::ceil(d / spacing)));
}

Vec2 hermite(const PathNode& a, const PathNode& b, double t, Vec2* deriv = nullptr) {
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  if (deriv) {
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    *deriv = (d00 * a.p + d01 * b.p) / h + d10 * a.v + d11 * b.v;
  }
  return h00 * a.p + h10 * h * a.v + h01 * b.p + h11 * h * b.v;
}

/// Transport along one segment c(t), t ∈ [t0, t1], given position/velocity callback.
template <class Curve>
Vec2 transport_segment(const MetricPatch& m, Curve&& c, double t0, double t1, const Vec2& w,
                       const GeodesicOptions& opt) {
  using Z = std::array<double, 2>;
  Z z{w.x(), w.y()};
  auto rhs = [&](const Z& s, Z& ds, double t) {
    Vec2 vel;
    const Vec2 pos = c(t, vel);
    const Christoffel g = christoffel(m.jet_extended(pos));
    const Vec2 d = -g.contract(vel, Vec2(s[0], s[1]));
    ds = {d.x(), d.y()};
  };
  if (t1 == t0) return w;
  odeint::integrate_adaptive(odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<Z>()), rhs,
                             z, t0, t1, (t1 - t0) / 16);
  return {z[0], z[1]};
}

void check_path_domain(const MetricPatch& m, const Vec2& p) {
  if (!m.domain().contains(p, kDomainSlack)) throw DomainError("path leaves the non-periodic domain");
}

}  // namespace

GeodesicState exp_map(const MetricPatch& patch, const GeodesicState& s, double t, const GeodesicOptions& opt) {
  if (t == 0) return s;
  if (t < 0) {
    GeodesicState r = exp_map(patch, {s.p, -s.v}, -t, opt);
    r.v = -r.v;
    return r;
  }
  if (!patch.domain().contains(s.p, kDomainSlack)) throw DomainError("initial point outside the domain");
  GeodesicFlow flow(patch, s, opt);
  const double spacing = opt.node_spacing * extent(patch.domain());
  while (flow.time() < t) {
    const auto [a, b] = flow.step();
    const double end = std::min(b, t);
    const int m = substeps(flow, a, end, spacing);
    for (int k = 1; k <= m; ++k) {
      const Vec2 p = flow.at(a + (end - a) * k / m).p;
      if (!patch.domain().contains(p, kDomainSlack)) throw DomainError("geodesic leaves the non-periodic domain");
    }
  }
  return flow.at(t);
}

// ---- leaf tracing --------------------------------------------------------------

Vec2 LeafTrace::position(double t) const {
  if (nodes.empty()) throw PreconditionError("empty trace");
  if (t <= nodes.front().t) return nodes.front().p;
  if (t >= nodes.back().t) return nodes.back().p;
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), t, [](double v, const PathNode& n) { return v < n.t; });
  return hermite(*(it - 1), *it, t);
}

std::string LeafTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t,x,y,u,v\n";
  for (const auto& n : nodes) os << n.t << ',' << n.p.x() << ',' << n.p.y() << ',' << n.v.x() << ',' << n.v.y() << '\n';
  return os.str();
}

namespace {

Vec2 lattice_shift(const Domain& d, const Vec2& delta) {
  Vec2 k = Vec2::Zero();
  for (int a = 0; a < 2; ++a)
    if (d.periodic(a)) k[a] = std::round(delta[a] / d.length(a)) * d.length(a);
  return k;
}

/// Root of f(t) = (γ(t) − q)·d in [a, b] given f(a) < 0 ≤ f(b).
double refine_crossing(const GeodesicFlow& flow, const Vec2& q, const Vec2& d, double a, double b) {
  auto f = [&](double t) { return (flow.at(t).p - q).dot(d); };
  double lo = a, hi = b, t = 0.5 * (a + b);
  for (int it = 0; it < 60; ++it) {
    const GeodesicState s = flow.at(t);
    const double ft = (s.p - q).dot(d);
    if (ft < 0) lo = t;
    else hi = t;
    const double dt = s.v.dot(d);
    double next = dt != 0 ? t - ft / dt : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-15 * (1 + std::abs(t))) {
      t = next;
      break;
    }
    t = next;
  }
  (void)f;
  return t;
}

Vec2 oriented_null_direction(const MetricPatch& m, const Vec2& p, const Vec2& like) {
  const LightlikePair L = lightlike_directions(m, p);
  Vec2 best = L.direction(0);
  if (std::abs(L.direction(1).dot(like)) > std::abs(best.dot(like))) best = L.direction(1);
  return best.dot(like) < 0 ? Vec2(-best) : best;
}

/// Transverse coordinate where the leaf from `start` (direction close to d0) crosses the
/// line through q orthogonal to d0, choosing the crossing closest in time to t_guess.
double neighbour_crossing(const MetricPatch& m, const Vec2& start, const Vec2& d0, const Vec2& q, double t_guess,
                          const GeodesicOptions& opt) {
  GeodesicFlow flow(m, {start, oriented_null_direction(m, start, d0)}, opt);
  const Vec2 n0(-d0.y(), d0.x());
  double best_t = -1, best_s = 0;
  while (flow.time() < 2 * t_guess + 1) {
    const auto [a, b] = flow.step();
    const double fa = (flow.at(a).p - q).dot(d0), fb = (flow.at(b).p - q).dot(d0);
    if (fa < 0 && fb >= 0) {
      const double t = refine_crossing(flow, q, d0, a, b);
      if (best_t < 0 || std::abs(t - t_guess) < std::abs(best_t - t_guess)) {
        best_t = t;
        best_s = (flow.at(t).p - q).dot(n0);
      }
    }
    if (best_t >= 0 && a > best_t + t_guess) break;
  }
  if (best_t < 0) throw Error("neighbouring leaf does not return to the transversal");
  return best_s;
}

}  // namespace

LeafTrace trace_leaf(const MetricPatch& patch, const Vec2& p, int family, double budget, const TraceOptions& opt) {
  if (family != 0 && family != 1) throw PreconditionError("family must be 0 or 1");
  const Domain& dom = patch.domain();
  if (!dom.contains(p, kDomainSlack)) throw DomainError("seed outside the domain");
  Vec2 d0 = opt.direction_hint ? oriented_null_direction(patch, p, *opt.direction_hint)
                                : lightlike_directions(patch, p).direction(family);
  if (opt.reverse) d0 = -d0;

  LeafTrace tr;
  tr.family = family;
  tr.nodes.push_back({0.0, p, d0});
  GeodesicFlow flow(patch, {p, d0}, opt.ode);
  const double spacing = opt.ode.node_spacing * extent(dom);

  for (;;) {
    double a, b;
    try {
      std::tie(a, b) = flow.step();
    } catch (const IncompleteGeodesic& e) {
      tr.stop = TraceStop::Incomplete;
      tr.escape_time = e.escape_time();
      return tr;
    }
    const int m = substeps(flow, a, b, spacing);
    for (int k = 1; k <= m; ++k) {
      const double ta = a + (b - a) * (k - 1) / m, tb = a + (b - a) * k / m;
      const GeodesicState sa = flow.at(ta), sb = flow.at(tb);

      if (!dom.contains(sb.p, kDomainSlack)) {
        double lo = ta, hi = tb;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (dom.contains(flow.at(mid).p, kDomainSlack) ? lo : hi) = mid;
        }
        const GeodesicState e = flow.at(lo);
        tr.euclidean_length += (e.p - sa.p).norm();
        tr.nodes.push_back({lo, e.p, e.v});
        tr.stop = TraceStop::LeftDomain;
        return tr;
      }

      // closure against the lattice translates near both sub-step ends
      for (const Vec2& k_shift : {lattice_shift(dom, sb.p - p), lattice_shift(dom, sa.p - p)}) {
        const Vec2 q = p + k_shift;
        const double fa = (sa.p - q).dot(d0), fb = (sb.p - q).dot(d0);
        if (!(fa < 0 && fb >= 0)) continue;
        const double ts = refine_crossing(flow, q, d0, ta, tb);
        const GeodesicState s = flow.at(ts);
        const double pos_err = (s.p - q).norm();
        const double ang_err = std::abs(std::atan2(cross(d0, s.v), d0.dot(s.v)));
        if (pos_err > opt.close_tol || ang_err > opt.angle_tol) continue;
        tr.euclidean_length += (s.p - sa.p).norm();
        tr.nodes.push_back({ts, s.p, s.v});
        tr.stop = TraceStop::Closed;
        ReturnData r;
        r.period = ts;
        r.shift = k_shift;
        r.velocity_ratio = s.v.dot(d0);
        r.closing_error = pos_err;
        if (opt.return_derivative) {
          const Vec2 n0(-d0.y(), d0.x());
          const double h = opt.transverse_step;
          try {
            const double sp = neighbour_crossing(patch, p + h * n0, d0, q, ts, opt.ode);
            const double sm = neighbour_crossing(patch, p - h * n0, d0, q, ts, opt.ode);
            r.return_derivative = (sp - sm) / (2 * h);
          } catch (const Error&) {
            r.return_derivative = std::nan("");
          }
        }
        tr.ret = r;
        return tr;
      }

      tr.euclidean_length += (sb.p - sa.p).norm();
      tr.nodes.push_back({tb, sb.p, sb.v});
      if (tr.euclidean_length >= budget) {
        tr.stop = TraceStop::BudgetExhausted;
        return tr;
      }
    }
  }
}

// ---- parallel transport --------------------------------------------------------

Vec2 parallel_transport(const MetricPatch& patch, std::span<const PathNode> path, const Vec2& w,
                        const GeodesicOptions& opt) {
  if (path.empty()) throw PreconditionError("empty path");
  Vec2 z = w;
  check_path_domain(patch, path[0].p);
  require_lorentzian(patch.jet_extended(path[0].p).g);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const PathNode &a = path[i], &b = path[i + 1];
    check_path_domain(patch, b.p);
    if (!(b.t > a.t)) throw PreconditionError("path parameters must increase");
    z = transport_segment(
        patch, [&](double t, Vec2& vel) { return hermite(a, b, t, &vel); }, a.t, b.t, z, opt);
  }
  return z;
}

Vec2 parallel_transport(const MetricPatch& patch, const std::vector<Vec2>& polyline, const Vec2& w,
                        const GeodesicOptions& opt) {
  if (polyline.empty()) throw PreconditionError("empty path");
  Vec2 z = w;
  check_path_domain(patch, polyline[0]);
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec2 a = polyline[i], d = polyline[i + 1] - polyline[i];
    check_path_domain(patch, polyline[i + 1]);
    z = transport_segment(
        patch,
        [&](double t, Vec2& vel) {
          vel = d;
          return Vec2(a + t * d);
        },
        0.0, 1.0, z, opt);
  }
  return z;
}

std::vector<PathNode> reversed(std::span<const PathNode> path) {
  std::vector<PathNode> out;
  out.reserve(path.size());
  const double T = path.empty() ? 0 : path.back().t;
  for (auto it = path.rbegin(); it != path.rend(); ++it) out.push_back({T - it->t, it->p, -it->v});
  return out;
}

double leaf_holonomy(const MetricPatch& patch, const LeafTrace& leaf, const GeodesicOptions& opt) {
  if (!leaf.closed()) throw PreconditionError("leaf_holonomy needs a closed leaf");
  const Vec2 d0 = leaf.nodes.front().v;
  // a closed leaf returns to a lattice translate; transport in the universal cover is the
  // same computation, the metric being periodic
  const Vec2 z = parallel_transport(patch, leaf.nodes, d0, opt);
  const double lambda = z.dot(d0) / d0.squaredNorm();
  if (std::abs(cross(z, d0)) > 1e-6 * z.norm() * d0.norm())
    throw Error("transported tangent vector is not tangent to the leaf at the return");
  return lambda;
}

}  // namespace lorentz
