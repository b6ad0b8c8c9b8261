#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace srjet {

// Immutable expression tree over named variables.  Grammar: + - * / ^,
// integer powers, unary minus, and the functions sin, cos, exp.
// Smart constructors fold constants, so derivative trees stay small.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };

  Kind kind;
  double value = 0.0;  // Const
  int var = -1;        // Var
  int exponent = 0;    // Pow
  ExprPtr a, b;
};

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& what, std::size_t off)
      : std::runtime_error(what), offset(off) {}
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constructors (with constant folding).
ExprPtr constant(double v);
ExprPtr variable(int index);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr neg(ExprPtr a);
ExprPtr pow(ExprPtr a, int n);
ExprPtr apply_sin(ExprPtr a);
ExprPtr apply_cos(ExprPtr a);
ExprPtr apply_exp(ExprPtr a);

// Parses `source` over the given variable names.  Throws ParseError with the
// byte offset of the offending token, or of the end of input when it is
// truncated.
ExprPtr parse_expression(const std::string& source,
                         const std::vector<std::string>& variables);

// Exact symbolic partial derivative with respect to variable `var`.
ExprPtr differentiate(const ExprPtr& e, int var);

// Evaluates at q (array of n variable values).  Throws EvalError on division
// by zero.
double eval(const ExprPtr& e, const double* q);

// Printable form; parse(to_string(e)) is evaluation-equivalent to e.
std::string to_string(const ExprPtr& e,
                      const std::vector<std::string>& variables);

bool is_zero(const ExprPtr& e);

}  // namespace srjet
