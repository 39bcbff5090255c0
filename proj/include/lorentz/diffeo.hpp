#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>

#include "lorentz/metric.hpp"

namespace lorentz {

using IMat2 = Eigen::Matrix2i;

struct DiffeoJet {
  Vec2 value;
  Mat2 jacobian;
};

/// Lift φ(p) = M p + d(p) of a torus map, with M integral and d doubly periodic.
class TorusDiffeo {
 public:
  using Map = std::function<DiffeoJet(const Vec2&)>;

  static TorusDiffeo identity();
  static TorusDiffeo linear(const IMat2& M);
  /// Closed-form displacement (dx, dy); the Jacobian is exact.
  static TorusDiffeo with_displacement(const IMat2& M, const Expr& dx, const Expr& dy);
  /// Arbitrary lift given as a callable returning φ(p) and Dφ(p); M is its integer part.
  static TorusDiffeo from_map(const IMat2& M, Map phi);
  /// ψ⁻¹ ∘ a ∘ ψ.
  static TorusDiffeo conjugate(const TorusDiffeo& a, const TorusDiffeo& psi);

  DiffeoJet evaluate(const Vec2& p) const;
  Vec2 operator()(const Vec2& p) const { return evaluate(p).value; }
  Mat2 jacobian(const Vec2& p) const { return evaluate(p).jacobian; }

  const IMat2& linear_part() const;
  bool is_symbolic() const;
  /// Closed-form displacement components (only when is_symbolic()).
  const Expr& dx() const;
  const Expr& dy() const;

  /// this ∘ inner.
  TorusDiffeo compose(const TorusDiffeo& inner) const;
  /// n-fold self composition (n ≥ 0; n < 0 uses the inverse).
  TorusDiffeo power(int n) const;
  /// Inverse lift, evaluated by Newton iteration unless the map is linear.
  TorusDiffeo inverse() const;

 private:
  struct Impl;
  explicit TorusDiffeo(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// φ*h with (φ*h)(p) = Dφ(p)ᵀ h(φ(p)) Dφ(p). Symbolic when both inputs are closed-form,
/// otherwise sampled on the patch grid.
MetricPatch pullback(const MetricPatch& h, const TorusDiffeo& phi);

}  // namespace lorentz
