#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sonir/error.hpp"

/// The mapping language: per-datum arithmetic over a column value.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | variable | builtin '(' args ')' | '(' expr ')'
///
/// Variables: x (cell value), i (row index), n (row count), min, max
/// (column extremes). Builtins: lin/5 clamp/3 log/1 exp/1 pow/2 abs/1
/// floor/1 round/1.
namespace sonir::dsl {

enum class Var { X, I, N, Min, Max };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Builtin { Lin, Clamp, Log, Exp, Pow, Abs, Floor, Round };

std::string_view name(Var v);
std::string_view name(Builtin b);
std::size_t arity(Builtin b);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Number {
  double value;
};
struct Variable {
  Var var;
};
struct Negate {
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Call {
  Builtin fn;
  std::vector<ExprPtr> args;
};

struct Expr {
  std::variant<Number, Variable, Negate, Binary, Call> node;
};

/// Structural equality.
bool operator==(const Expr& a, const Expr& b);

ExprPtr number(double v);
ExprPtr variable(Var v);
ExprPtr negate(ExprPtr e);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr call(Builtin fn, std::vector<ExprPtr> args);

class ParseError : public Error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(ErrorCode::ParseError, std::to_string(line) + ":" + std::to_string(column) + ": " +
                                         message),
        line_(line),
        column_(column),
        detail_(message) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

/// Throws ParseError with a 1-based position.
ExprPtr parse(std::string_view source);

/// Canonical text with the minimum parentheses; parse(print(e)) == e.
std::string print(const Expr& e);

struct EvalEnv {
  double x = 0.0;
  double i = 0.0;
  double n = 1.0;
  double min = 0.0;
  double max = 0.0;
};

/// c + (v - a) * (d - c) / (b - a), exact at both endpoints; the midpoint
/// of [c, d] when a == b.
double lin(double v, double a, double b, double c, double d);

/// Reversed bounds are swapped and a NaN bound leaves that side open.
/// A NaN value passes through.
double clamp(double v, double lo, double hi);

/// Postfix program run on a value stack. Evaluation never throws; bad
/// arithmetic yields NaN or infinities for the caller to handle.
class Program {
public:
  explicit Program(const Expr& e);
  double run(const EvalEnv& env) const;
  std::size_t size() const noexcept { return code_.size(); }

private:
  enum class Op : std::uint8_t { Const, Load, Neg, Add, Sub, Mul, Div, Pow, Call };
  struct Instr {
    Op op;
    std::uint8_t arg = 0;
    double value = 0.0;
  };
  void emit(const Expr& e);

  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

double eval(const Expr& e, const EvalEnv& env);

ExprPtr identity_mapping();

}  // namespace sonir::dsl

namespace sonir {

/// A named mapping: an arithmetic expression for quantitative data plus an
/// optional token recode table for nominal data.
struct MappingSource {
  std::string name;
  std::string source = "x";
  std::map<std::string, std::string> recode;
};

}  // namespace sonir
