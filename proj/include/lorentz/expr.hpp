#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "lorentz/errors.hpp"

namespace lorentz {

/// Value with first and second partial derivatives in (x, y).
struct Jet2 {
  double v = 0, x = 0, y = 0, xx = 0, xy = 0, yy = 0;

  static Jet2 constant(double c) { return {c, 0, 0, 0, 0, 0}; }
  static Jet2 var_x(double x) { return {x, 1, 0, 0, 0, 0}; }
  static Jet2 var_y(double y) { return {y, 0, 1, 0, 0, 0}; }
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator*(double c, const Jet2& a);

/// Chain rule for a scalar function with derivatives f0 = f(a.v), f1 = f'(a.v), f2 = f''(a.v).
Jet2 chain(const Jet2& a, double f0, double f1, double f2);

enum class Var { X, Y };

/// Immutable arithmetic expression in the variables x and y.
///
/// Grammar: sums and products of numbers, `x`, `y`, `pi`, parenthesized
/// subexpressions, `^` (right associative), unary minus and the functions
/// sin, cos, exp, log.
class Expr {
 public:
  enum class Op { Const, X, Y, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log };

  struct Node {
    Op op;
    double value = 0;  // for Const
    std::shared_ptr<const Node> a, b;
  };

  Expr(double c = 0.0);  // NOLINT: implicit constants are convenient in formulas

  static Expr x();
  static Expr y();
  static Expr parse(std::string_view text, int line = 1, int column_offset = 0);

  double operator()(double x, double y) const;

  /// Evaluates with any scalar type supporting +,-,*,/ and sin/cos/exp/log/pow found by ADL or std.
  template <class T>
  T evaluate(const T& x, const T& y) const;

  Jet2 jet(double x, double y) const;
  Expr derivative(Var v) const;
  /// Replaces x and y by the given expressions.
  Expr substitute(const Expr& x_new, const Expr& y_new) const;

  bool is_constant() const { return node_->op == Op::Const; }
  double constant_value() const { return node_->value; }
  bool depends_on(Var v) const;
  std::string str() const;

  const Node& node() const { return *node_; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& a, const Expr& b);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr make(Op op, const Expr& a, const Expr& b = Expr());

  std::shared_ptr<const Node> node_;
};

namespace detail {

template <class T>
T eval_node(const Expr::Node& n, const T& x, const T& y) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::pow;
  using std::sin;
  switch (n.op) {
    case Expr::Op::Const: return T(n.value);
    case Expr::Op::X: return x;
    case Expr::Op::Y: return y;
    case Expr::Op::Add: return T(eval_node(*n.a, x, y) + eval_node(*n.b, x, y));
    case Expr::Op::Sub: return T(eval_node(*n.a, x, y) - eval_node(*n.b, x, y));
    case Expr::Op::Mul: return T(eval_node(*n.a, x, y) * eval_node(*n.b, x, y));
    case Expr::Op::Div: return T(eval_node(*n.a, x, y) / eval_node(*n.b, x, y));
    case Expr::Op::Neg: return T(-eval_node(*n.a, x, y));
    case Expr::Op::Sin: return T(sin(eval_node(*n.a, x, y)));
    case Expr::Op::Cos: return T(cos(eval_node(*n.a, x, y)));
    case Expr::Op::Exp: return T(exp(eval_node(*n.a, x, y)));
    case Expr::Op::Log: return T(log(eval_node(*n.a, x, y)));
    case Expr::Op::Pow: {
      const T base = eval_node(*n.a, x, y);
      if (n.b->op == Expr::Op::Const) {
        const double e = n.b->value;
        if (e == std::round(e) && std::abs(e) <= 64) {
          // integer powers by repeated multiplication keep negative bases valid
          T r(1), b = base;
          long k = static_cast<long>(std::abs(e));
          while (k) {
            if (k & 1) r = T(r * b);
            b = T(b * b);
            k >>= 1;
          }
          return e < 0 ? T(T(1) / r) : r;
        }
      }
      return T(pow(base, eval_node(*n.b, x, y)));
    }
  }
  return T(0);
}

}  // namespace detail

template <class T>
T Expr::evaluate(const T& x, const T& y) const {
  return detail::eval_node(*node_, x, y);
}

}  // namespace lorentz
