#include "srjet/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace srjet {

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool is_const(const ExprPtr& e, double v) {
  return e->kind == Expr::Kind::Const && e->value == v;
}

}  // namespace

bool is_zero(const ExprPtr& e) { return is_const(e, 0.0); }

ExprPtr constant(double v) {
  Expr e;
  e.kind = Expr::Kind::Const;
  e.value = v;
  return make(e);
}

ExprPtr variable(int index) {
  Expr e;
  e.kind = Expr::Kind::Var;
  e.var = index;
  return make(e);
}

ExprPtr add(ExprPtr a, ExprPtr b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const)
    return constant(a->value + b->value);
  Expr e;
  e.kind = Expr::Kind::Add;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(e);
}

ExprPtr sub(ExprPtr a, ExprPtr b) {
  if (is_zero(b)) return a;
  if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const)
    return constant(a->value - b->value);
  if (is_zero(a)) return neg(std::move(b));
  Expr e;
  e.kind = Expr::Kind::Sub;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(e);
}

ExprPtr mul(ExprPtr a, ExprPtr b) {
  if (is_zero(a) || is_zero(b)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const)
    return constant(a->value * b->value);
  Expr e;
  e.kind = Expr::Kind::Mul;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(e);
}

ExprPtr div(ExprPtr a, ExprPtr b) {
  if (is_const(b, 1.0)) return a;
  if (is_zero(a) && !is_zero(b)) return constant(0.0);
  if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const &&
      b->value != 0.0)
    return constant(a->value / b->value);
  Expr e;
  e.kind = Expr::Kind::Div;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(e);
}

ExprPtr neg(ExprPtr a) {
  if (a->kind == Expr::Kind::Const) return constant(-a->value);
  if (a->kind == Expr::Kind::Neg) return a->a;
  Expr e;
  e.kind = Expr::Kind::Neg;
  e.a = std::move(a);
  return make(e);
}

ExprPtr pow(ExprPtr a, int n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return a;
  if (a->kind == Expr::Kind::Const)
    return constant(std::pow(a->value, static_cast<double>(n)));
  Expr e;
  e.kind = Expr::Kind::Pow;
  e.exponent = n;
  e.a = std::move(a);
  return make(e);
}

ExprPtr apply_sin(ExprPtr a) {
  if (a->kind == Expr::Kind::Const) return constant(std::sin(a->value));
  Expr e;
  e.kind = Expr::Kind::Sin;
  e.a = std::move(a);
  return make(e);
}

ExprPtr apply_cos(ExprPtr a) {
  if (a->kind == Expr::Kind::Const) return constant(std::cos(a->value));
  Expr e;
  e.kind = Expr::Kind::Cos;
  e.a = std::move(a);
  return make(e);
}

ExprPtr apply_exp(ExprPtr a) {
  if (a->kind == Expr::Kind::Const) return constant(std::exp(a->value));
  Expr e;
  e.kind = Expr::Kind::Exp;
  e.a = std::move(a);
  return make(e);
}

namespace {

class Parser {
 public:
  Parser(const std::string& src, const std::vector<std::string>& vars)
      : src_(src), vars_(vars) {}

  ExprPtr run() {
    ExprPtr e = expression();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected character '" + std::string(1, src_[pos_]) +
                           "'",
                       pos_);
    return e;
  }

 private:
  const std::string& src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected ") + what, pos_);
  }

  ExprPtr expression() {
    ExprPtr e = term();
    for (;;) {
      if (accept('+'))
        e = add(e, term());
      else if (accept('-'))
        e = sub(e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    for (;;) {
      if (accept('*'))
        e = mul(e, unary());
      else if (accept('/'))
        e = div(e, unary());
      else
        return e;
    }
  }

  // Power binds tighter than unary minus: -x^2 == -(x^2).
  ExprPtr unary() {
    if (accept('-')) return neg(unary());
    if (accept('+')) return unary();
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    if (!accept('^')) return base;
    return pow(base, exponent_literal());
  }

  int exponent_literal() {
    bool negated = false;
    if (accept('-')) negated = true;
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      ++pos_;
      int n = exponent_literal();
      expect(')', "')'");
      return negated ? -n : n;
    }
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    if (pos_ == start) throw ParseError("expected integer exponent", pos_);
    int n = std::atoi(src_.substr(start, pos_ - start).c_str());
    return negated ? -n : n;
  }

  ExprPtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = expression();
      expect(')', "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return identifier();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  ExprPtr number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = save;
      }
    }
    char* end = nullptr;
    std::string text = src_.substr(start, pos_ - start);
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str()) throw ParseError("malformed number", start);
    return constant(v);
  }

  ExprPtr identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    std::string name = src_.substr(start, pos_ - start);
    if (peek() == '(') {
      ++pos_;  // consume '('
      ExprPtr arg = expression();
      expect(')', "')'");
      if (name == "sin") return apply_sin(arg);
      if (name == "cos") return apply_cos(arg);
      if (name == "exp") return apply_exp(arg);
      throw ParseError("unknown function '" + name + "'", start);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return variable(static_cast<int>(i));
    throw ParseError("unknown identifier '" + name + "'", start);
  }
};

}  // namespace

ExprPtr parse_expression(const std::string& source,
                         const std::vector<std::string>& variables) {
  return Parser(source, variables).run();
}

ExprPtr differentiate(const ExprPtr& e, int var) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Const:
      return constant(0.0);
    case K::Var:
      return constant(e->var == var ? 1.0 : 0.0);
    case K::Add:
      return add(differentiate(e->a, var), differentiate(e->b, var));
    case K::Sub:
      return sub(differentiate(e->a, var), differentiate(e->b, var));
    case K::Mul:
      return add(mul(differentiate(e->a, var), e->b),
                 mul(e->a, differentiate(e->b, var)));
    case K::Div:
      // (a/b)' = a'/b - a b' / b^2
      return sub(div(differentiate(e->a, var), e->b),
                 div(mul(e->a, differentiate(e->b, var)), pow(e->b, 2)));
    case K::Neg:
      return neg(differentiate(e->a, var));
    case K::Pow:
      return mul(mul(constant(static_cast<double>(e->exponent)),
                     pow(e->a, e->exponent - 1)),
                 differentiate(e->a, var));
    case K::Sin:
      return mul(apply_cos(e->a), differentiate(e->a, var));
    case K::Cos:
      return neg(mul(apply_sin(e->a), differentiate(e->a, var)));
    case K::Exp:
      return mul(apply_exp(e->a), differentiate(e->a, var));
  }
  throw std::logic_error("unreachable expression kind");
}

double eval(const ExprPtr& e, const double* q) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Const:
      return e->value;
    case K::Var:
      return q[e->var];
    case K::Add:
      return eval(e->a, q) + eval(e->b, q);
    case K::Sub:
      return eval(e->a, q) - eval(e->b, q);
    case K::Mul:
      return eval(e->a, q) * eval(e->b, q);
    case K::Div: {
      double d = eval(e->b, q);
      if (d == 0.0) throw EvalError("division by zero");
      return eval(e->a, q) / d;
    }
    case K::Neg:
      return -eval(e->a, q);
    case K::Pow: {
      double base = eval(e->a, q);
      int n = e->exponent;
      bool inv = n < 0;
      if (inv) {
        if (base == 0.0) throw EvalError("division by zero");
        n = -n;
      }
      double r = 1.0;
      for (int i = 0; i < n; ++i) r *= base;
      return inv ? 1.0 / r : r;
    }
    case K::Sin:
      return std::sin(eval(e->a, q));
    case K::Cos:
      return std::cos(eval(e->a, q));
    case K::Exp:
      return std::exp(eval(e->a, q));
  }
  throw std::logic_error("unreachable expression kind");
}

std::string to_string(const ExprPtr& e,
                      const std::vector<std::string>& variables) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Const: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", e->value);
      std::string s(buf);
      return e->value < 0.0 ? "(" + s + ")" : s;
    }
    case K::Var:
      return variables[e->var];
    case K::Add:
      return "(" + to_string(e->a, variables) + "+" +
             to_string(e->b, variables) + ")";
    case K::Sub:
      return "(" + to_string(e->a, variables) + "-" +
             to_string(e->b, variables) + ")";
    case K::Mul:
      return "(" + to_string(e->a, variables) + "*" +
             to_string(e->b, variables) + ")";
    case K::Div:
      return "(" + to_string(e->a, variables) + "/" +
             to_string(e->b, variables) + ")";
    case K::Neg:
      return "(-" + to_string(e->a, variables) + ")";
    case K::Pow:
      return "(" + to_string(e->a, variables) + ")^(" +
             std::to_string(e->exponent) + ")";
    case K::Sin:
      return "sin(" + to_string(e->a, variables) + ")";
    case K::Cos:
      return "cos(" + to_string(e->a, variables) + ")";
    case K::Exp:
      return "exp(" + to_string(e->a, variables) + ")";
  }
  throw std::logic_error("unreachable expression kind");
}

}  // namespace srjet
