#pragma once

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>
#include <ostream>

namespace lorentz {

using BigRational = boost::rational<boost::multiprecision::cpp_int>;

/// Exact element a + b√5 of ℚ(√5).
struct QSqrt5 {
  BigRational a{0}, b{0};

  QSqrt5() = default;
  QSqrt5(long n) : a(n) {}  // NOLINT: integers embed implicitly
  QSqrt5(BigRational a_, BigRational b_) : a(std::move(a_)), b(std::move(b_)) {}

  friend QSqrt5 operator+(const QSqrt5& x, const QSqrt5& y) { return {x.a + y.a, x.b + y.b}; }
  friend QSqrt5 operator-(const QSqrt5& x, const QSqrt5& y) { return {x.a - y.a, x.b - y.b}; }
  friend QSqrt5 operator-(const QSqrt5& x) { return {-x.a, -x.b}; }
  friend QSqrt5 operator*(const QSqrt5& x, const QSqrt5& y) {
    return {x.a * y.a + 5 * x.b * y.b, x.a * y.b + x.b * y.a};
  }
  QSqrt5 conjugate() const { return {a, -b}; }
  BigRational norm() const { return a * a - 5 * b * b; }
  friend QSqrt5 operator/(const QSqrt5& x, const QSqrt5& y) {
    const BigRational n = y.norm();  // nonzero for y ≠ 0 since √5 is irrational
    const QSqrt5 t = x * y.conjugate();
    return {t.a / n, t.b / n};
  }
  friend bool operator==(const QSqrt5& x, const QSqrt5& y) { return x.a == y.a && x.b == y.b; }
  friend bool operator!=(const QSqrt5& x, const QSqrt5& y) { return !(x == y); }
  bool is_zero() const { return a.numerator().is_zero() && b.numerator().is_zero(); }

  double to_double() const;
  friend std::ostream& operator<<(std::ostream& os, const QSqrt5& x);
};

/// Row-major 2×2 matrix over ℚ(√5).
using QMat2 = std::array<QSqrt5, 4>;

inline QMat2 operator*(const QMat2& x, const QMat2& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
          x[2] * y[1] + x[3] * y[3]};
}
inline QMat2 transpose(const QMat2& x) { return {x[0], x[2], x[1], x[3]}; }

}  // namespace lorentz
