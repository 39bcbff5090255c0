#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace lorentz {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Rectangle [x0,x1]x[y0,y1] with per-axis periodicity (period = side length).
struct Domain {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool periodic_x = false, periodic_y = false;

  static Domain unit_torus() { return {0, 1, 0, 1, true, true}; }

  double length(int axis) const { return axis == 0 ? x1 - x0 : y1 - y0; }
  double lo(int axis) const { return axis == 0 ? x0 : y0; }
  double hi(int axis) const { return axis == 0 ? x1 : y1; }
  bool periodic(int axis) const { return axis == 0 ? periodic_x : periodic_y; }
  bool is_torus() const { return periodic_x && periodic_y; }

  /// Maps periodic coordinates into [lo, hi); leaves the others untouched.
  Vec2 wrap(const Vec2& p) const;
  /// True when p lies in the closed domain, up to `slack` on non-periodic axes.
  bool contains(const Vec2& p, double slack = 0) const;
  bool operator==(const Domain& o) const = default;
};

/// Tensor grid on a domain. Periodic axes exclude the right endpoint;
/// non-periodic axes include both endpoints.
struct GridSpec {
  Domain domain;
  int nx = 128, ny = 128;

  int n(int axis) const { return axis == 0 ? nx : ny; }
  double spacing(int axis) const;
  double node(int axis, int i) const;
  Vec2 point(int i, int j) const { return {node(0, i), node(1, j)}; }
  bool operator==(const GridSpec& o) const = default;
};

/// Scalar samples on a GridSpec, stored as values(i, j) with i along x.
using GridArray = Eigen::ArrayXXd;

/// Derivative of the given order (0, 1 or 2) along `axis`: spectral on
/// periodic axes, 6th-order finite differences otherwise.
GridArray differentiate(const GridSpec& g, const GridArray& f, int axis, int order);

/// Trapezoid-rule integral of f over the grid domain.
double integrate(const GridSpec& g, const GridArray& f);

/// Fornberg finite-difference weights at x0 for nodes xs, up to derivative order m.
std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& xs, int m);

/// 8-point tensor Lagrange interpolation of several co-located fields at p.
class GridInterpolator {
 public:
  static constexpr int kWidth = 8;
  GridInterpolator(const GridSpec& g, const Vec2& p);
  double operator()(const GridArray& f) const;

 private:
  std::array<int, kWidth> ix_{}, iy_{};
  std::array<double, kWidth> wx_{}, wy_{};
};

}  // namespace lorentz
