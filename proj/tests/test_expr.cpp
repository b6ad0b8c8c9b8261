#include <cmath>
#include <random>

#include "doctest.h"
#include "srjet/expr.hpp"

using namespace srjet;

namespace {

const std::vector<std::string> xyz = {"x", "y", "z"};

double fd_derivative(const ExprPtr& e, std::vector<double> q, int var,
                     double h = 1e-5) {
  auto d = [&](double hh) {
    std::vector<double> p = q, m = q;
    p[var] += hh;
    m[var] -= hh;
    return (eval(e, p.data()) - eval(e, m.data())) / (2.0 * hh);
  };
  return (4.0 * d(h / 2) - d(h)) / 3.0;  // Richardson
}

// small random expression trees for the property checks
ExprPtr random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
  std::uniform_real_distribution<double> cst(-2.0, 2.0);
  std::uniform_int_distribution<int> vi(0, 2);
  switch (pick(rng)) {
    case 0: return constant(cst(rng));
    case 1: return variable(vi(rng));
    case 2: return add(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 3: return sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 4: return mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 5: return pow(random_expr(rng, depth - 1), vi(rng) + 1);
    case 6: return apply_sin(random_expr(rng, depth - 1));
    case 7: return apply_cos(random_expr(rng, depth - 1));
    default: return apply_exp(mul(constant(0.3), random_expr(rng, depth - 1)));
  }
}

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("parse basic expressions") {
  double q[3] = {0.5, 0.0, 0.0};
  CHECK(eval(parse_expression("x^2/2", xyz), q) == doctest::Approx(0.125));
  CHECK(eval(parse_expression("1-x", xyz), q) == doctest::Approx(0.5));
}

TEST_CASE("precedence: power binds tighter than unary minus") {
  double q[3] = {2.0, 3.0, 0.0};
  CHECK(eval(parse_expression("-x^2", xyz), q) == doctest::Approx(-4.0));
  CHECK(eval(parse_expression("2*x+y", xyz), q) == doctest::Approx(7.0));
  CHECK(eval(parse_expression("x+y*z", xyz), q) == doctest::Approx(2.0));
}

TEST_CASE("syntax errors carry offsets") {
  // unbalanced exponent parenthesis: the ')' is expected at end of input
  CHECK_THROWS_AS(parse_expression("x^(2", xyz), ParseError);
  try {
    parse_expression("x^(2", xyz);
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
  }
  CHECK_THROWS_AS(parse_expression("foo+1", xyz), ParseError);
  CHECK_THROWS_AS(parse_expression("1+*2", xyz), ParseError);
}

TEST_CASE("division by zero raises at evaluation") {
  double q[3] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(eval(parse_expression("1/x", xyz), q), EvalError);
}

TEST_CASE("derivative examples") {
  ExprPtr e = differentiate(parse_expression("x^2/2", xyz), 0);
  double q[3] = {0.7, 0.0, 0.0};
  CHECK(eval(e, q) == doctest::Approx(0.7));  // d/dx x^2/2 = x

  ExprPtr d1 = differentiate(parse_expression("1-x", xyz), 0);
  CHECK(eval(d1, q) == doctest::Approx(-1.0));

  ExprPtr s = parse_expression("sin(x)*y", xyz);
  double p[3] = {0.0, 2.0, 0.0};
  CHECK(eval(differentiate(s, 0), p) == doctest::Approx(2.0));
  CHECK(eval(differentiate(s, 0), p) ==
        doctest::Approx(fd_derivative(s, {0.0, 2.0, 0.0}, 0)).epsilon(1e-8));
}

TEST_CASE("symbolic vs finite-difference derivative on random trees") {
  std::mt19937 rng(20240917);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 100; ++trial) {
    ExprPtr e = random_expr(rng, 3);
    std::vector<double> q = {pt(rng), pt(rng), pt(rng)};
    for (int var = 0; var < 3; ++var) {
      ExprPtr d = differentiate(e, var);
      double sym, num;
      try {
        sym = eval(d, q.data());
        num = fd_derivative(e, q, var);
      } catch (const EvalError&) {
        continue;
      }
      if (!std::isfinite(sym) || !std::isfinite(num) || std::abs(num) > 1e3)
        continue;  // wild trees make the FD stencil meaningless
      CHECK(std::abs(sym - num) <= 1e-6 * std::max(1.0, std::abs(num)));
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("parse-print-parse round trip is evaluation equivalent") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    ExprPtr e = random_expr(rng, 3);
    ExprPtr r = parse_expression(to_string(e, xyz), xyz);
    for (int p = 0; p < 5; ++p) {
      double q[3] = {pt(rng), pt(rng), pt(rng)};
      double a, b;
      try {
        a = eval(e, q);
        b = eval(r, q);
      } catch (const EvalError&) {
        continue;
      }
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("constant folding keeps structure evaluable") {
  double q[1] = {0.0};
  ExprPtr e = parse_expression("2*3+1", {"t"});
  CHECK(e->kind == Expr::Kind::Const);
  CHECK(eval(e, q) == doctest::Approx(7.0));
}

}  // TEST_SUITE
