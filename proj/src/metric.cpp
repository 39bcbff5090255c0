#include "lorentz/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lorentz {

namespace {

constexpr double kDomainSlack = 1e-8;

Mat2 sym(double e, double f, double g) {
  Mat2 m;
  m << e, f, f, g;
  return m;
}

// derivative orders stored per component: value, x, y, xx, xy, yy
enum Slot { V = 0, DX, DY, DXX, DXY, DYY };

}  // namespace

const Mat2& MetricJet::dd(int a, int b) const {
  if (a == 0 && b == 0) return gxx;
  if (a == 1 && b == 1) return gyy;
  return gxy;
}

struct MetricPatch::Impl {
  GridSpec grid;
  std::optional<ExprMetric> expr;
  std::array<std::array<GridArray, 6>, 3> fields;  // grid path only
};

MetricPatch MetricPatch::from_expressions(const Domain& domain, const ExprMetric& m, int nx, int ny) {
  auto impl = std::make_shared<Impl>();
  impl->grid = GridSpec{domain, nx, ny};
  impl->expr = m;
  // periodic components must match across identified edges
  const Expr* comps[3] = {&m.E, &m.F, &m.G};
  for (int axis = 0; axis < 2; ++axis) {
    if (!domain.periodic(axis)) continue;
    for (int k = 0; k <= 8; ++k) {
      const double t = domain.lo(1 - axis) + domain.length(1 - axis) * (k + 0.37) / 9.0;
      Vec2 a, b;
      a[axis] = domain.lo(axis);
      b[axis] = domain.hi(axis);
      a[1 - axis] = b[1 - axis] = t;
      for (const Expr* e : comps) {
        const double va = (*e)(a.x(), a.y()), vb = (*e)(b.x(), b.y());
        if (std::abs(va - vb) > 1e-9 * (1 + std::abs(va)))
          throw PreconditionError("metric component is not periodic along a periodic axis");
      }
    }
  }
  return MetricPatch(impl);
}

MetricPatch MetricPatch::from_samples(const GridSpec& grid, const GridArray& E, const GridArray& F,
                                      const GridArray& G) {
  for (const GridArray* a : {&E, &F, &G})
    if (a->rows() != grid.nx || a->cols() != grid.ny)
      throw PreconditionError("sample array does not match grid resolution");
  auto impl = std::make_shared<Impl>();
  impl->grid = grid;
  const GridArray* src[3] = {&E, &F, &G};
  for (int c = 0; c < 3; ++c) {
    auto& f = impl->fields[c];
    f[V] = *src[c];
    f[DX] = differentiate(grid, f[V], 0, 1);
    f[DY] = differentiate(grid, f[V], 1, 1);
    f[DXX] = differentiate(grid, f[V], 0, 2);
    f[DYY] = differentiate(grid, f[V], 1, 2);
    f[DXY] = differentiate(grid, f[DX], 1, 1);
  }
  return MetricPatch(impl);
}

MetricPatch MetricPatch::sampled(const GridSpec& grid) const {
  GridArray E(grid.nx, grid.ny), F(grid.nx, grid.ny), G(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Mat2 g = jet(grid.point(i, j)).g;
      E(i, j) = g(0, 0);
      F(i, j) = g(0, 1);
      G(i, j) = g(1, 1);
    }
  return from_samples(grid, E, F, G);
}

MetricPatch MetricPatch::with_resolution(int nx, int ny) const {
  GridSpec g{domain(), nx, ny};
  if (has_expressions()) return from_expressions(domain(), *impl_->expr, nx, ny);
  return sampled(g);
}

MetricPatch MetricPatch::scaled(double c) const {
  if (has_expressions()) {
    const ExprMetric& m = *impl_->expr;
    return from_expressions(domain(), {Expr(c) * m.E, Expr(c) * m.F, Expr(c) * m.G}, grid().nx, grid().ny);
  }
  auto impl = std::make_shared<Impl>(*impl_);
  for (auto& comp : impl->fields)
    for (auto& f : comp) f *= c;
  return MetricPatch(impl);
}

const Domain& MetricPatch::domain() const { return impl_->grid.domain; }
const GridSpec& MetricPatch::grid() const { return impl_->grid; }
bool MetricPatch::has_expressions() const { return impl_->expr.has_value(); }

const ExprMetric& MetricPatch::expressions() const {
  if (!impl_->expr) throw PreconditionError("metric has no closed-form expressions");
  return *impl_->expr;
}

MetricJet MetricPatch::jet(const Vec2& p) const {
  if (!domain().contains(p, kDomainSlack)) throw DomainError("point outside the non-periodic domain");
  return jet_extended(p);
}

MetricJet MetricPatch::jet_extended(const Vec2& p_in) const {
  const Domain& d = domain();
  Vec2 p = p_in;
  if (!impl_->expr) {
    for (int a = 0; a < 2; ++a)
      if (!d.periodic(a)) p[a] = std::clamp(p[a], d.lo(a), d.hi(a));
  }
  MetricJet out;
  if (impl_->expr) {
    const ExprMetric& m = *impl_->expr;
    const Jet2 e = m.E.jet(p.x(), p.y()), f = m.F.jet(p.x(), p.y()), g = m.G.jet(p.x(), p.y());
    out.g = sym(e.v, f.v, g.v);
    out.gx = sym(e.x, f.x, g.x);
    out.gy = sym(e.y, f.y, g.y);
    out.gxx = sym(e.xx, f.xx, g.xx);
    out.gxy = sym(e.xy, f.xy, g.xy);
    out.gyy = sym(e.yy, f.yy, g.yy);
    return out;
  }
  const GridInterpolator ip(grid(), d.wrap(p));
  const auto& fs = impl_->fields;
  auto at = [&](int slot) { return sym(ip(fs[0][slot]), ip(fs[1][slot]), ip(fs[2][slot])); };
  out.g = at(V);
  out.gx = at(DX);
  out.gy = at(DY);
  out.gxx = at(DXX);
  out.gxy = at(DXY);
  out.gyy = at(DYY);
  return out;
}

std::vector<MetricJet> MetricPatch::node_jets() const {
  const GridSpec& g = grid();
  std::vector<MetricJet> out(static_cast<std::size_t>(g.nx) * g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      MetricJet& m = out[i + static_cast<std::size_t>(g.nx) * j];
      if (impl_->expr) {
        m = jet(g.point(i, j));
        continue;
      }
      const auto& fs = impl_->fields;
      auto at = [&](int slot) { return sym(fs[0][slot](i, j), fs[1][slot](i, j), fs[2][slot](i, j)); };
      m.g = at(V);
      m.gx = at(DX);
      m.gy = at(DY);
      m.gxx = at(DXX);
      m.gxy = at(DXY);
      m.gyy = at(DYY);
    }
  return out;
}

// ---- pointwise geometry ---------------------------------------------------

void require_lorentzian(const Mat2& g) {
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1);
  if (!(det < 0)) throw SignatureError("metric is not Lorentzian (EG - F^2 >= 0)");
}

Mat2 eval_metric(const MetricPatch& patch, const Vec2& p) {
  Mat2 g = patch.jet(p).g;
  require_lorentzian(g);
  return g;
}

namespace {

struct FirstKind {
  std::array<Mat2, 2> lower;  // lower[l](i, j) = Γ_{l,ij}
};

FirstKind first_kind(const std::array<const Mat2*, 2>& dg) {
  FirstKind f;
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        f.lower[l](i, j) = 0.5 * ((*dg[i])(j, l) + (*dg[j])(i, l) - (*dg[l])(i, j));
  return f;
}

std::array<Mat2, 2> raise(const Mat2& ginv, const FirstKind& f) {
  std::array<Mat2, 2> out{Mat2::Zero(), Mat2::Zero()};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) out[k] += ginv(k, l) * f.lower[l];
  return out;
}

}  // namespace

Christoffel christoffel(const MetricJet& j) {
  require_lorentzian(j.g);
  Christoffel c;
  c.gamma = raise(j.g.inverse(), first_kind({&j.gx, &j.gy}));
  return c;
}

Christoffel christoffel(const MetricPatch& patch, const Vec2& p) { return christoffel(patch.jet(p)); }

double curvature(const MetricJet& j) {
  require_lorentzian(j.g);
  const Mat2 ginv = j.g.inverse();
  const std::array<Mat2, 2> G = raise(ginv, first_kind({&j.gx, &j.gy}));
  // dG[c][a](d, b) = ∂_c Γᵃ_db
  std::array<std::array<Mat2, 2>, 2> dG;
  for (int c = 0; c < 2; ++c) {
    const Mat2 dginv = -ginv * j.d(c) * ginv;
    const FirstKind fk = first_kind({&j.dd(c, 0), &j.dd(c, 1)});
    const FirstKind f0 = first_kind({&j.gx, &j.gy});
    for (int a = 0; a < 2; ++a) {
      dG[c][a] = Mat2::Zero();
      for (int l = 0; l < 2; ++l) dG[c][a] += dginv(a, l) * f0.lower[l] + ginv(a, l) * fk.lower[l];
    }
  }
  // Rᵃ_bcd = ∂c Γᵃ_db − ∂d Γᵃ_cb + Γᵃ_ce Γᵉ_db − Γᵃ_de Γᵉ_cb, with (b,c,d) = (1,0,1)
  Vec2 R;  // Rᵃ_101
  for (int a = 0; a < 2; ++a) {
    double r = dG[0][a](1, 1) - dG[1][a](0, 1);
    for (int e = 0; e < 2; ++e) r += G[a](0, e) * G[e](1, 1) - G[a](1, e) * G[e](0, 1);
    R[a] = r;
  }
  const double R0101 = j.g(0, 0) * R[0] + j.g(0, 1) * R[1];
  return -R0101 / j.g.determinant();
}

double curvature(const MetricPatch& patch, const Vec2& p) { return curvature(patch.jet(p)); }

LightlikePair lightlike_directions(const Mat2& g) {
  require_lorentzian(g);
  // E c² + 2F cs + G s² = A + B cos 2θ + C sin 2θ with A = (E+G)/2, B = (E−G)/2, C = F
  const double A = 0.5 * (g(0, 0) + g(1, 1));
  const double B = 0.5 * (g(0, 0) - g(1, 1));
  const double C = g(0, 1);
  const double R = std::hypot(B, C);
  const double psi = std::atan2(C, B);
  const double delta = std::acos(std::clamp(-A / R, -1.0, 1.0));
  LightlikePair out;
  for (int s = 0; s < 2; ++s) {
    double th = 0.5 * (psi + (s == 0 ? delta : -delta));
    th = std::fmod(th, std::numbers::pi);
    if (th < 0) th += std::numbers::pi;
    if (th >= std::numbers::pi) th -= std::numbers::pi;
    out.angle[s] = th;
  }
  if (out.angle[0] > out.angle[1]) std::swap(out.angle[0], out.angle[1]);
  return out;
}

LightlikePair lightlike_directions(const MetricPatch& patch, const Vec2& p) {
  return lightlike_directions(patch.jet(p).g);
}

// ---- line fields --------------------------------------------------------------

namespace {

double wrap_pi(double a) {
  a = std::fmod(a, std::numbers::pi);
  if (a < 0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

// distance between two angles mod π
double angle_gap(double a, double b) {
  const double d = std::abs(wrap_pi(a - b));
  return std::min(d, std::numbers::pi - d);
}

}  // namespace

LineField LineField::from_angles(const GridSpec& g, GridArray angles) {
  LineField f;
  f.grid = g;
  f.angle = angles.unaryExpr([](double a) { return wrap_pi(a); });
  f.cos2 = (2 * f.angle).cos();
  f.sin2 = (2 * f.angle).sin();
  // a smooth field changes by much less than a quarter turn between neighbours
  constexpr double kJump = std::numbers::pi / 8;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (i + 1 < g.nx && angle_gap(f.angle(i, j), f.angle(i + 1, j)) > kJump) f.smooth = false;
      if (j + 1 < g.ny && angle_gap(f.angle(i, j), f.angle(i, j + 1)) > kJump) f.smooth = false;
    }
  return f;
}

Vec2 LineField::direction_at(const Vec2& p, const Vec2& like) const {
  const GridInterpolator ip(grid, grid.domain.wrap(p));
  const double c = ip(cos2), s = ip(sin2);
  const double th = 0.5 * std::atan2(s, c);
  Vec2 d(std::cos(th), std::sin(th));
  if (d.dot(like) < 0) d = -d;
  return d;
}

LineField lightlike_field(const MetricPatch& patch, int family) {
  if (family != 0 && family != 1) throw PreconditionError("family must be 0 or 1");
  const GridSpec& g = patch.grid();
  const auto jets = patch.node_jets();
  GridArray ang(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const LightlikePair lp = lightlike_directions(jets[i + static_cast<std::size_t>(g.nx) * j].g);
      if (i == 0 && j == 0) {
        ang(i, j) = lp.angle[family];
        continue;
      }
      const double ref = i > 0 ? ang(i - 1, j) : ang(i, j - 1);
      ang(i, j) = angle_gap(lp.angle[0], ref) <= angle_gap(lp.angle[1], ref) ? lp.angle[0] : lp.angle[1];
    }
  return LineField::from_angles(g, ang);
}

// ---- grid-level quantities --------------------------------------------------

GridArray curvature_field(const MetricPatch& patch) {
  const GridSpec& g = patch.grid();
  const auto jets = patch.node_jets();
  GridArray K(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) K(i, j) = curvature(jets[i + static_cast<std::size_t>(g.nx) * j]);
  return K;
}

GridArray volume_density(const MetricPatch& patch) {
  const GridSpec& g = patch.grid();
  const auto jets = patch.node_jets();
  GridArray v(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Mat2& m = jets[i + static_cast<std::size_t>(g.nx) * j].g;
      require_lorentzian(m);
      v(i, j) = std::sqrt(-m.determinant());
    }
  return v;
}

double total_curvature(const MetricPatch& patch) {
  if (!patch.domain().is_torus()) throw PreconditionError("total_curvature needs a torus (both axes periodic)");
  return integrate(patch.grid(), curvature_field(patch) * volume_density(patch));
}

std::array<double, 3> ck_distance_orders(const MetricPatch& a, const MetricPatch& b, int k) {
  if (k < 0 || k > 2) throw PreconditionError("ck_distance supports k in {0, 1, 2}");
  if (!(a.domain() == b.domain()) || a.grid().nx != b.grid().nx || a.grid().ny != b.grid().ny)
    throw PreconditionError("ck_distance needs metrics on the same domain and grid");
  const auto ja = a.node_jets(), jb = b.node_jets();
  std::array<double, 3> out{0, 0, 0};
  auto upd = [](double& acc, const Mat2& x, const Mat2& y) {
    acc = std::max(acc, (x - y).cwiseAbs().maxCoeff());
  };
  for (std::size_t n = 0; n < ja.size(); ++n) {
    const MetricJet &p = ja[n], &q = jb[n];
    upd(out[0], p.g, q.g);
    if (k >= 1) {
      upd(out[1], p.gx, q.gx);
      upd(out[1], p.gy, q.gy);
    }
    if (k >= 2) {
      upd(out[2], p.gxx, q.gxx);
      upd(out[2], p.gxy, q.gxy);
      upd(out[2], p.gyy, q.gyy);
    }
  }
  return out;
}

double ck_distance(const MetricPatch& a, const MetricPatch& b, int k) {
  const auto o = ck_distance_orders(a, b, k);
  return std::max({o[0], o[1], o[2]});
}

double c0_distance(const GridArray& a, const GridArray& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw PreconditionError("c0_distance: shape mismatch");
  return (a - b).abs().maxCoeff();
}

}  // namespace lorentz
