#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "lorentz/expr.hpp"
#include "lorentz/grid.hpp"

namespace lorentz {

/// Metric matrix and its first and second partial derivatives at a point.
struct MetricJet {
  Mat2 g = Mat2::Zero(), gx = Mat2::Zero(), gy = Mat2::Zero();
  Mat2 gxx = Mat2::Zero(), gxy = Mat2::Zero(), gyy = Mat2::Zero();

  const Mat2& d(int axis) const { return axis == 0 ? gx : gy; }
  const Mat2& dd(int a, int b) const;
};

/// Closed-form components of E dx² + 2F dx dy + G dy².
struct ExprMetric {
  Expr E, F, G;
};

/// Lorentzian metric on a rectangle or torus. Immutable; cheap to copy.
class MetricPatch {
 public:
  static MetricPatch from_expressions(const Domain& domain, const ExprMetric& m, int nx = 128, int ny = 128);
  /// Builds a grid metric; derivative fields are computed spectrally / by finite differences.
  static MetricPatch from_samples(const GridSpec& grid, const GridArray& E, const GridArray& F, const GridArray& G);

  /// Grid-sampled copy of this metric on `grid`.
  MetricPatch sampled(const GridSpec& grid) const;
  MetricPatch sampled() const { return sampled(grid()); }
  /// Same metric with a different quadrature/sampling grid.
  MetricPatch with_resolution(int nx, int ny) const;
  /// Constant multiple c·h.
  MetricPatch scaled(double c) const;

  const Domain& domain() const;
  const GridSpec& grid() const;
  bool has_expressions() const;
  const ExprMetric& expressions() const;

  /// Jet at p; throws DomainError outside a non-periodic domain.
  MetricJet jet(const Vec2& p) const;
  /// Jet without the domain check: closed-form metrics are continued analytically,
  /// grid metrics are clamped to the domain. Used inside integrator stages.
  MetricJet jet_extended(const Vec2& p) const;
  /// Jets at every grid node, index i + nx*j.
  std::vector<MetricJet> node_jets() const;

 private:
  struct Impl;
  explicit MetricPatch(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Christoffel symbols: gamma[k](i, j) = Γᵏᵢⱼ.
struct Christoffel {
  std::array<Mat2, 2> gamma{Mat2::Zero(), Mat2::Zero()};

  double operator()(int k, int i, int j) const { return gamma[k](i, j); }
  /// The vector Γ(a, b)ᵏ = Γᵏᵢⱼ aⁱ bʲ.
  Vec2 contract(const Vec2& a, const Vec2& b) const {
    return {a.dot(gamma[0] * b), a.dot(gamma[1] * b)};
  }
};

/// The two null directions, as angles in [0, π) sorted ascending.
struct LightlikePair {
  std::array<double, 2> angle{};
  Vec2 direction(int family) const { return {std::cos(angle[family]), std::sin(angle[family])}; }
};

/// Projective direction field sampled on a grid, stored as angles mod π.
struct LineField {
  GridSpec grid;
  GridArray angle;      // in [0, π)
  bool smooth = true;   // no jumps beyond the sampling resolution (mod π)
  GridArray cos2, sin2; // doubled-angle components used for interpolation

  Vec2 direction(int i, int j) const { return {std::cos(angle(i, j)), std::sin(angle(i, j))}; }
  /// Interpolated unit direction at p, oriented to agree with `like` when given.
  Vec2 direction_at(const Vec2& p, const Vec2& like = Vec2::Zero()) const;
  /// Builds the field from node angles and sets the smoothness flag.
  static LineField from_angles(const GridSpec& g, GridArray angles);
};

/// One family of null directions per node, followed by continuity from node (0, 0).
LineField lightlike_field(const MetricPatch& patch, int family);

void require_lorentzian(const Mat2& g);

Mat2 eval_metric(const MetricPatch& patch, const Vec2& p);
Christoffel christoffel(const MetricJet& j);
Christoffel christoffel(const MetricPatch& patch, const Vec2& p);
/// Gaussian curvature with the sign convention K = −R₁₂₁₂ / det g.
double curvature(const MetricJet& j);
double curvature(const MetricPatch& patch, const Vec2& p);
LightlikePair lightlike_directions(const Mat2& g);
LightlikePair lightlike_directions(const MetricPatch& patch, const Vec2& p);

/// Curvature at every grid node.
GridArray curvature_field(const MetricPatch& patch);
/// Volume density √(F² − EG) at every grid node.
GridArray volume_density(const MetricPatch& patch);
/// ∫ K dv over a torus by the trapezoid rule.
double total_curvature(const MetricPatch& patch);

/// Max over grid nodes of component differences and their partials up to order k.
double ck_distance(const MetricPatch& a, const MetricPatch& b, int k);
/// Per-order breakdown: element o is the max over partials of exact order o.
std::array<double, 3> ck_distance_orders(const MetricPatch& a, const MetricPatch& b, int k);

/// Sup-norm difference of two scalar grid fields (the C⁰ distance used for curvature fields).
double c0_distance(const GridArray& a, const GridArray& b);

}  // namespace lorentz
