#include "lorentz/expr.hpp"

#include <cctype>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace lorentz {

Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.x + b.x, a.y + b.y, a.xx + b.xx, a.xy + b.xy, a.yy + b.yy};
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.x - b.x, a.y - b.y, a.xx - b.xx, a.xy - b.xy, a.yy - b.yy};
}

Jet2 operator-(const Jet2& a) { return {-a.v, -a.x, -a.y, -a.xx, -a.xy, -a.yy}; }

Jet2 operator*(double c, const Jet2& a) {
  return {c * a.v, c * a.x, c * a.y, c * a.xx, c * a.xy, c * a.yy};
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v,
          a.x * b.v + a.v * b.x,
          a.y * b.v + a.v * b.y,
          a.xx * b.v + 2 * a.x * b.x + a.v * b.xx,
          a.xy * b.v + a.x * b.y + a.y * b.x + a.v * b.xy,
          a.yy * b.v + 2 * a.y * b.y + a.v * b.yy};
}

Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  return {f0,
          f1 * a.x,
          f1 * a.y,
          f2 * a.x * a.x + f1 * a.xx,
          f2 * a.x * a.y + f1 * a.xy,
          f2 * a.y * a.y + f1 * a.yy};
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double r = 1.0 / b.v;
  return a * chain(b, r, -r * r, 2 * r * r * r);
}

namespace {

using Node = Expr::Node;
using Op = Expr::Op;

bool is_const(const Expr& e, double c) { return e.is_constant() && e.constant_value() == c; }

Jet2 jet_node(const Node& n, double x, double y) {
  switch (n.op) {
    case Op::Const: return Jet2::constant(n.value);
    case Op::X: return Jet2::var_x(x);
    case Op::Y: return Jet2::var_y(y);
    case Op::Add: return jet_node(*n.a, x, y) + jet_node(*n.b, x, y);
    case Op::Sub: return jet_node(*n.a, x, y) - jet_node(*n.b, x, y);
    case Op::Mul: return jet_node(*n.a, x, y) * jet_node(*n.b, x, y);
    case Op::Div: return jet_node(*n.a, x, y) / jet_node(*n.b, x, y);
    case Op::Neg: return -jet_node(*n.a, x, y);
    case Op::Sin: {
      const Jet2 a = jet_node(*n.a, x, y);
      const double s = std::sin(a.v), c = std::cos(a.v);
      return chain(a, s, c, -s);
    }
    case Op::Cos: {
      const Jet2 a = jet_node(*n.a, x, y);
      const double s = std::sin(a.v), c = std::cos(a.v);
      return chain(a, c, -s, -c);
    }
    case Op::Exp: {
      const Jet2 a = jet_node(*n.a, x, y);
      const double e = std::exp(a.v);
      return chain(a, e, e, e);
    }
    case Op::Log: {
      const Jet2 a = jet_node(*n.a, x, y);
      return chain(a, std::log(a.v), 1 / a.v, -1 / (a.v * a.v));
    }
    case Op::Pow: {
      const Jet2 a = jet_node(*n.a, x, y);
      if (n.b->op == Op::Const) {
        const double e = n.b->value;
        if (e == 0) return Jet2::constant(1);
        const double v0 = std::pow(a.v, e);
        const double v1 = e * std::pow(a.v, e - 1);
        const double v2 = e == 1 ? 0.0 : e * (e - 1) * std::pow(a.v, e - 2);
        return chain(a, v0, v1, v2);
      }
      // general power: exp(b log a)
      const Jet2 b = jet_node(*n.b, x, y);
      const Jet2 la = chain(a, std::log(a.v), 1 / a.v, -1 / (a.v * a.v));
      const Jet2 z = b * la;
      const double ez = std::exp(z.v);
      return chain(z, ez, ez, ez);
    }
  }
  return {};
}

}  // namespace

Expr::Expr(double c) : node_(std::make_shared<const Node>(Node{Op::Const, c, nullptr, nullptr})) {}

Expr Expr::x() { return Expr(std::make_shared<const Node>(Node{Op::X, 0, nullptr, nullptr})); }
Expr Expr::y() { return Expr(std::make_shared<const Node>(Node{Op::Y, 0, nullptr, nullptr})); }

Expr Expr::make(Op op, const Expr& a, const Expr& b) {
  return Expr(std::make_shared<const Node>(Node{op, 0, a.node_, b.node_}));
}

double Expr::operator()(double x, double y) const { return evaluate<double>(x, y); }

Jet2 Expr::jet(double x, double y) const { return jet_node(*node_, x, y); }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() + b.constant_value());
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  return Expr::make(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() - b.constant_value());
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return -b;
  return Expr::make(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() * b.constant_value());
  if (is_const(a, 0) || is_const(b, 0)) return Expr(0.0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  return Expr::make(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() / b.constant_value());
  if (is_const(a, 0)) return Expr(0.0);
  if (is_const(b, 1)) return a;
  return Expr::make(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.constant_value());
  if (a.node().op == Op::Neg) return Expr(a.node_->a);
  return Expr::make(Op::Neg, a);
}

Expr pow(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(std::pow(a.constant_value(), b.constant_value()));
  if (is_const(b, 0)) return Expr(1.0);
  if (is_const(b, 1)) return a;
  return Expr::make(Op::Pow, a, b);
}

Expr sin(const Expr& a) {
  if (a.is_constant()) return Expr(std::sin(a.constant_value()));
  return Expr::make(Op::Sin, a);
}

Expr cos(const Expr& a) {
  if (a.is_constant()) return Expr(std::cos(a.constant_value()));
  return Expr::make(Op::Cos, a);
}

Expr exp(const Expr& a) {
  if (a.is_constant()) return Expr(std::exp(a.constant_value()));
  return Expr::make(Op::Exp, a);
}

Expr log(const Expr& a) {
  if (a.is_constant()) return Expr(std::log(a.constant_value()));
  return Expr::make(Op::Log, a);
}

Expr Expr::derivative(Var v) const {
  const Node& n = *node_;
  const auto sub = [](const std::shared_ptr<const Node>& p) { return Expr(p); };
  switch (n.op) {
    case Op::Const: return Expr(0.0);
    case Op::X: return Expr(v == Var::X ? 1.0 : 0.0);
    case Op::Y: return Expr(v == Var::Y ? 1.0 : 0.0);
    case Op::Add: return sub(n.a).derivative(v) + sub(n.b).derivative(v);
    case Op::Sub: return sub(n.a).derivative(v) - sub(n.b).derivative(v);
    case Op::Neg: return -sub(n.a).derivative(v);
    case Op::Mul: {
      const Expr a = sub(n.a), b = sub(n.b);
      return a.derivative(v) * b + a * b.derivative(v);
    }
    case Op::Div: {
      const Expr a = sub(n.a), b = sub(n.b);
      return (a.derivative(v) * b - a * b.derivative(v)) / (b * b);
    }
    case Op::Sin: {
      const Expr a = sub(n.a);
      return cos(a) * a.derivative(v);
    }
    case Op::Cos: {
      const Expr a = sub(n.a);
      return -(sin(a) * a.derivative(v));
    }
    case Op::Exp: {
      const Expr a = sub(n.a);
      return *this * a.derivative(v);
    }
    case Op::Log: {
      const Expr a = sub(n.a);
      return a.derivative(v) / a;
    }
    case Op::Pow: {
      const Expr a = sub(n.a), b = sub(n.b);
      if (b.is_constant()) {
        const double e = b.constant_value();
        return Expr(e) * pow(a, Expr(e - 1)) * a.derivative(v);
      }
      return *this * (b.derivative(v) * log(a) + b * a.derivative(v) / a);
    }
  }
  return Expr(0.0);
}

Expr Expr::substitute(const Expr& x_new, const Expr& y_new) const {
  const Node& n = *node_;
  const auto s = [&](const std::shared_ptr<const Node>& p) { return Expr(p).substitute(x_new, y_new); };
  switch (n.op) {
    case Op::Const: return *this;
    case Op::X: return x_new;
    case Op::Y: return y_new;
    case Op::Add: return s(n.a) + s(n.b);
    case Op::Sub: return s(n.a) - s(n.b);
    case Op::Mul: return s(n.a) * s(n.b);
    case Op::Div: return s(n.a) / s(n.b);
    case Op::Neg: return -s(n.a);
    case Op::Pow: return pow(s(n.a), s(n.b));
    case Op::Sin: return sin(s(n.a));
    case Op::Cos: return cos(s(n.a));
    case Op::Exp: return exp(s(n.a));
    case Op::Log: return log(s(n.a));
  }
  return *this;
}

bool Expr::depends_on(Var v) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return false;
    case Op::X: return v == Var::X;
    case Op::Y: return v == Var::Y;
    default: break;
  }
  return (n.a && Expr(n.a).depends_on(v)) || (n.b && Expr(n.b).depends_on(v));
}

std::string Expr::str() const {
  const Node& n = *node_;
  const auto s = [](const std::shared_ptr<const Node>& p) { return Expr(p).str(); };
  switch (n.op) {
    case Op::Const: {
      std::ostringstream os;
      os.precision(17);
      os << n.value;
      std::string t = os.str();
      return n.value < 0 ? "(" + t + ")" : t;
    }
    case Op::X: return "x";
    case Op::Y: return "y";
    case Op::Add: return "(" + s(n.a) + " + " + s(n.b) + ")";
    case Op::Sub: return "(" + s(n.a) + " - " + s(n.b) + ")";
    case Op::Mul: return "(" + s(n.a) + " * " + s(n.b) + ")";
    case Op::Div: return "(" + s(n.a) + " / " + s(n.b) + ")";
    case Op::Pow: return "(" + s(n.a) + " ^ " + s(n.b) + ")";
    case Op::Neg: return "(-" + s(n.a) + ")";
    case Op::Sin: return "sin(" + s(n.a) + ")";
    case Op::Cos: return "cos(" + s(n.a) + ")";
    case Op::Exp: return "exp(" + s(n.a) + ")";
    case Op::Log: return "log(" + s(n.a) + ")";
  }
  return "?";
}

// ---- parser -------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view text, int line, int column_offset)
      : text_(text), line_(line), col0_(column_offset) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, col0_ + static_cast<int>(pos_) + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      if (accept('+')) e = e + parse_product();
      else if (accept('-')) e = e - parse_product();
      else return e;
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) e = e * parse_unary();
      else if (accept('/')) e = e / parse_unary();
      else return e;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return pow(base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string_view id = text_.substr(start, pos_ - start);
      if (id == "x") return Expr::x();
      if (id == "y") return Expr::y();
      if (id == "pi") return Expr(std::numbers::pi);
      Expr (*fn)(const Expr&) = nullptr;
      if (id == "sin") fn = &sin;
      else if (id == "cos") fn = &cos;
      else if (id == "exp") fn = &exp;
      else if (id == "log") fn = &log;
      if (!fn) {
        pos_ = start;
        fail("unknown identifier '" + std::string(id) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      Expr arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return fn(arg);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const std::string buf(text_.substr(pos_));
    const double v = std::strtod(buf.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - buf.c_str());
    (void)begin;
    if (used == 0) fail("malformed number");
    pos_ += used;
    return Expr(v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
};

}  // namespace

Expr Expr::parse(std::string_view text, int line, int column_offset) {
  return Parser(text, line, column_offset).parse_all();
}

}  // namespace lorentz
