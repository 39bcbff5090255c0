#include "lorentz/diffeo.hpp"

#include <cmath>

namespace lorentz {

struct TorusDiffeo::Impl {
  IMat2 M = IMat2::Identity();
  std::optional<std::pair<Expr, Expr>> disp;  // closed form
  // closed-form partials of the displacement: dxx = ∂x dx, ...
  std::optional<std::array<Expr, 4>> ddisp;
  Map map;  // general path (also filled for closed-form maps)
};

namespace {

Mat2 to_real(const IMat2& M) { return M.cast<double>(); }

IMat2 integer_inverse(const IMat2& M) {
  const int det = M.determinant();
  if (det != 1 && det != -1) throw PreconditionError("integer part of a torus map must have determinant ±1");
  IMat2 inv;
  inv << M(1, 1), -M(0, 1), -M(1, 0), M(0, 0);
  return inv * det;
}

}  // namespace

TorusDiffeo TorusDiffeo::identity() { return linear(IMat2::Identity()); }

TorusDiffeo TorusDiffeo::linear(const IMat2& M) { return with_displacement(M, Expr(0.0), Expr(0.0)); }

TorusDiffeo TorusDiffeo::with_displacement(const IMat2& M, const Expr& dx, const Expr& dy) {
  integer_inverse(M);  // validates det ±1
  auto impl = std::make_shared<Impl>();
  impl->M = M;
  impl->disp = std::make_pair(dx, dy);
  impl->ddisp = std::array<Expr, 4>{dx.derivative(Var::X), dx.derivative(Var::Y), dy.derivative(Var::X),
                                    dy.derivative(Var::Y)};
  for (double sx : {0.13, 0.61})
    for (double sy : {0.29, 0.87})
      for (const Expr* e : {&dx, &dy}) {
        const double v = (*e)(sx, sy);
        if (std::abs((*e)(sx + 1, sy) - v) > 1e-9 * (1 + std::abs(v)) ||
            std::abs((*e)(sx, sy + 1) - v) > 1e-9 * (1 + std::abs(v)))
          throw PreconditionError("displacement of a torus map must be 1-periodic in x and y");
      }
  const Impl* raw = impl.get();
  const Mat2 Mr = to_real(M);
  impl->map = [raw, Mr](const Vec2& p) {
    const auto& [ex, ey] = *raw->disp;
    const auto& d = *raw->ddisp;
    DiffeoJet j;
    j.value = Mr * p + Vec2(ex(p.x(), p.y()), ey(p.x(), p.y()));
    j.jacobian = Mr;
    j.jacobian(0, 0) += d[0](p.x(), p.y());
    j.jacobian(0, 1) += d[1](p.x(), p.y());
    j.jacobian(1, 0) += d[2](p.x(), p.y());
    j.jacobian(1, 1) += d[3](p.x(), p.y());
    return j;
  };
  return TorusDiffeo(impl);
}

TorusDiffeo TorusDiffeo::from_map(const IMat2& M, Map phi) {
  integer_inverse(M);
  auto impl = std::make_shared<Impl>();
  impl->M = M;
  impl->map = std::move(phi);
  return TorusDiffeo(impl);
}

DiffeoJet TorusDiffeo::evaluate(const Vec2& p) const { return impl_->map(p); }
const IMat2& TorusDiffeo::linear_part() const { return impl_->M; }
bool TorusDiffeo::is_symbolic() const { return impl_->disp.has_value(); }

const Expr& TorusDiffeo::dx() const {
  if (!impl_->disp) throw PreconditionError("torus map has no closed-form displacement");
  return impl_->disp->first;
}

const Expr& TorusDiffeo::dy() const {
  if (!impl_->disp) throw PreconditionError("torus map has no closed-form displacement");
  return impl_->disp->second;
}

TorusDiffeo TorusDiffeo::compose(const TorusDiffeo& inner) const {
  const IMat2 M = impl_->M * inner.impl_->M;
  if (is_symbolic() && inner.is_symbolic()) {
    const IMat2& M1 = impl_->M;
    const IMat2& M2 = inner.impl_->M;
    const Expr X = Expr::x(), Y = Expr::y();
    const Expr px = Expr(M2(0, 0)) * X + Expr(M2(0, 1)) * Y + inner.dx();
    const Expr py = Expr(M2(1, 0)) * X + Expr(M2(1, 1)) * Y + inner.dy();
    const Expr nx = Expr(M1(0, 0)) * inner.dx() + Expr(M1(0, 1)) * inner.dy() + dx().substitute(px, py);
    const Expr ny = Expr(M1(1, 0)) * inner.dx() + Expr(M1(1, 1)) * inner.dy() + dy().substitute(px, py);
    return with_displacement(M, nx, ny);
  }
  const TorusDiffeo outer = *this;
  return from_map(M, [outer, inner](const Vec2& p) {
    const DiffeoJet a = inner.evaluate(p);
    const DiffeoJet b = outer.evaluate(a.value);
    return DiffeoJet{b.value, b.jacobian * a.jacobian};
  });
}

TorusDiffeo TorusDiffeo::power(int n) const {
  if (n < 0) return inverse().power(-n);
  TorusDiffeo out = identity();
  for (int k = 0; k < n; ++k) out = compose(out);
  return out;
}

TorusDiffeo TorusDiffeo::inverse() const {
  const IMat2 Minv = integer_inverse(impl_->M);
  if (is_symbolic() && dx().is_constant() && dy().is_constant()) {
    const Vec2 d = to_real(Minv) * Vec2(dx().constant_value(), dy().constant_value());
    return with_displacement(Minv, Expr(-d.x()), Expr(-d.y()));
  }
  const TorusDiffeo fwd = *this;
  const Mat2 Mi = to_real(Minv);
  return from_map(Minv, [fwd, Mi](const Vec2& p) {
    Vec2 q = Mi * p;
    DiffeoJet j = fwd.evaluate(q);
    for (int it = 0; it < 100; ++it) {
      const Vec2 r = j.value - p;
      if (std::abs(j.jacobian.determinant()) < 1e-300) throw PreconditionError("torus map has a singular Jacobian");
      q -= j.jacobian.lu().solve(r);
      j = fwd.evaluate(q);
      if ((j.value - p).lpNorm<Eigen::Infinity>() < 1e-15 * (1 + p.lpNorm<Eigen::Infinity>())) break;
    }
    return DiffeoJet{q, j.jacobian.inverse()};
  });
}

TorusDiffeo TorusDiffeo::conjugate(const TorusDiffeo& a, const TorusDiffeo& psi) {
  return psi.inverse().compose(a.compose(psi));
}

MetricPatch pullback(const MetricPatch& h, const TorusDiffeo& phi) {
  const Domain& dom = h.domain();
  const IMat2& M = phi.linear_part();
  if (M != IMat2::Identity()) {
    if (!dom.is_torus()) throw PreconditionError("pullback by a map with nontrivial integer part needs a torus");
    // the lattice Lx ℤ × Ly ℤ must be preserved
    const double Lx = dom.length(0), Ly = dom.length(1);
    const double r1 = M(1, 0) * Lx / Ly, r2 = M(0, 1) * Ly / Lx;
    if (std::abs(r1 - std::round(r1)) > 1e-12 || std::abs(r2 - std::round(r2)) > 1e-12)
      throw PreconditionError("integer part does not preserve the period lattice");
  }
  if (h.has_expressions() && phi.is_symbolic()) {
    const ExprMetric& m = h.expressions();
    const Expr X = Expr::x(), Y = Expr::y();
    const Expr px = Expr(M(0, 0)) * X + Expr(M(0, 1)) * Y + phi.dx();
    const Expr py = Expr(M(1, 0)) * X + Expr(M(1, 1)) * Y + phi.dy();
    const Expr J11 = px.derivative(Var::X), J12 = px.derivative(Var::Y);
    const Expr J21 = py.derivative(Var::X), J22 = py.derivative(Var::Y);
    const Expr E = m.E.substitute(px, py), F = m.F.substitute(px, py), G = m.G.substitute(px, py);
    const Expr two(2.0);
    ExprMetric out{J11 * J11 * E + two * J11 * J21 * F + J21 * J21 * G,
                   J11 * J12 * E + (J11 * J22 + J21 * J12) * F + J21 * J22 * G,
                   J12 * J12 * E + two * J12 * J22 * F + J22 * J22 * G};
    return MetricPatch::from_expressions(dom, out, h.grid().nx, h.grid().ny);
  }
  const GridSpec& g = h.grid();
  GridArray E(g.nx, g.ny), F(g.nx, g.ny), G(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const DiffeoJet d = phi.evaluate(g.point(i, j));
      if (std::abs(d.jacobian.determinant()) < 1e-14) throw PreconditionError("torus map has a singular Jacobian");
      const Mat2 q = d.jacobian.transpose() * h.jet(d.value).g * d.jacobian;
      E(i, j) = q(0, 0);
      F(i, j) = q(0, 1);
      G(i, j) = q(1, 1);
    }
  return MetricPatch::from_samples(g, E, F, G);
}

}  // namespace lorentz
