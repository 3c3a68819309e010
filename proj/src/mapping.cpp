#include "sonir/mapping.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

namespace sonir::dsl {

namespace {

constexpr std::array<std::pair<std::string_view, Var>, 5> kVars{{
    {"x", Var::X}, {"i", Var::I}, {"n", Var::N}, {"min", Var::Min}, {"max", Var::Max}}};

constexpr std::array<std::tuple<std::string_view, Builtin, std::size_t>, 8> kBuiltins{{
    {"lin", Builtin::Lin, 5},
    {"clamp", Builtin::Clamp, 3},
    {"log", Builtin::Log, 1},
    {"exp", Builtin::Exp, 1},
    {"pow", Builtin::Pow, 2},
    {"abs", Builtin::Abs, 1},
    {"floor", Builtin::Floor, 1},
    {"round", Builtin::Round, 1},
}};

constexpr std::size_t kMaxDepth = 200;

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t line;
  std::size_t column;
  double number = 0.0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Number: return "number '" + std::string(t.text) + "'";
    case Tok::Ident: return "identifier '" + std::string(t.text) + "'";
    default: return "'" + std::string(t.text) + "'";
  }
}

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    const std::size_t line = line_;
    const std::size_t col = col_;
    if (pos_ >= src_.size()) return Token{Tok::End, {}, line, col};
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number(line, col);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_')) {
        advance();
      }
      return Token{Tok::Ident, src_.substr(start, pos_ - start), line, col};
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '/': kind = Tok::Slash; break;
      case '^': kind = Tok::Caret; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      default:
        throw ParseError(line, col, "unexpected character '" + std::string(1, c) + "'");
    }
    advance();
    return Token{kind, src_.substr(pos_ - 1, 1), line, col};
  }

private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  Token lex_number(std::size_t line, std::size_t col) {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        advance();
        ++n;
      }
      return n;
    };
    std::size_t count = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      count += digits();
    }
    if (count == 0) throw ParseError(line, col, "expected digits in number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save_pos = pos_, save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (digits() == 0) {
        pos_ = save_pos;
        col_ = save_col;
      }
    }
    const auto text = src_.substr(start, pos_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
      throw ParseError(line, col, "number '" + std::string(text) + "' is out of range");
    }
    return Token{Tok::Number, text, line, col, value};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
public:
  explicit Parser(std::string_view src) : lexer_(src) { tok_ = lexer_.next(); }

  ExprPtr parse_all() {
    auto e = expr();
    if (tok_.kind != Tok::End) fail("expected operator or end of input");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& expected) {
    throw ParseError(tok_.line, tok_.column, expected + ", found " + describe(tok_));
  }

  Token take() {
    Token t = tok_;
    tok_ = lexer_.next();
    return t;
  }

  void expect(Tok kind, std::string_view what) {
    if (tok_.kind != kind) fail("expected " + std::string(what));
    take();
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) {
        throw ParseError(p.tok_.line, p.tok_.column, "expression nested too deeply");
      }
    }
    ~DepthGuard() { --p.depth_; }
  };

  ExprPtr expr() {
    DepthGuard guard(*this);
    auto lhs = term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const auto op = take().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = binary(op, lhs, term());
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const auto op = take().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      lhs = binary(op, lhs, unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    DepthGuard guard(*this);
    if (tok_.kind == Tok::Minus) {
      take();
      return negate(unary());
    }
    return power();
  }

  ExprPtr power() {
    auto base = primary();
    if (tok_.kind == Tok::Caret) {
      take();
      return binary(BinaryOp::Pow, base, unary());
    }
    return base;
  }

  ExprPtr primary() {
    if (tok_.kind == Tok::Number) return number(take().number);
    if (tok_.kind == Tok::LParen) {
      take();
      auto inner = expr();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (tok_.kind == Tok::Ident) {
      const Token id = take();
      for (const auto& [n, v] : kVars) {
        if (id.text == n) return variable(v);
      }
      for (const auto& [n, fn, count] : kBuiltins) {
        if (id.text != n) continue;
        expect(Tok::LParen, "'(' after " + std::string(n));
        std::vector<ExprPtr> args;
        if (tok_.kind != Tok::RParen) {
          args.push_back(expr());
          while (tok_.kind == Tok::Comma) {
            take();
            args.push_back(expr());
          }
        }
        expect(Tok::RParen, args.empty() ? "argument or ')'" : "',' or ')'");
        if (args.size() != count) {
          throw ParseError(id.line, id.column,
                           std::string(n) + " expects " + std::to_string(count) + " argument" +
                               (count == 1 ? "" : "s") + ", got " + std::to_string(args.size()));
        }
        return call(fn, std::move(args));
      }
      throw ParseError(id.line, id.column,
                       "unknown identifier '" + std::string(id.text) +
                           "' (expected x, i, n, min, max or a builtin)");
    }
    fail("expected number, variable, function call or '('");
  }

  Lexer lexer_;
  Token tok_{Tok::End, {}, 1, 1};
  std::size_t depth_ = 0;
};

// Precedence levels for printing.
constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

int precedence(const Expr& e) {
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    switch (b->op) {
      case BinaryOp::Add:
      case BinaryOp::Sub: return kPrecAdd;
      case BinaryOp::Mul:
      case BinaryOp::Div: return kPrecMul;
      case BinaryOp::Pow: return kPrecPow;
    }
  }
  if (std::holds_alternative<Negate>(e.node)) return kPrecNeg;
  return kPrecAtom;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print_to(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print_to(e, out);
  if (parens) out += ')';
}

void print_to(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Number>) {
          out += format_number(n.value);
        } else if constexpr (std::is_same_v<T, Variable>) {
          out += name(n.var);
        } else if constexpr (std::is_same_v<T, Negate>) {
          out += '-';
          print_wrapped(*n.operand, precedence(*n.operand) < kPrecNeg, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          const int p = precedence(e);
          const int lp = precedence(*n.lhs);
          const int rp = precedence(*n.rhs);
          bool lparen = false;
          bool rparen = false;
          std::string_view sym;
          if (n.op == BinaryOp::Pow) {
            lparen = lp < kPrecAtom;
            rparen = rp < kPrecNeg;
            sym = "^";
          } else {
            lparen = lp < p;
            rparen = rp <= p || (p == kPrecMul && rp < kPrecNeg);
            sym = n.op == BinaryOp::Add   ? " + "
                  : n.op == BinaryOp::Sub ? " - "
                  : n.op == BinaryOp::Mul ? " * "
                                          : " / ";
          }
          print_wrapped(*n.lhs, lparen, out);
          out += sym;
          print_wrapped(*n.rhs, rparen, out);
        } else {
          out += name(n.fn);
          out += '(';
          for (std::size_t k = 0; k < n.args.size(); ++k) {
            if (k) out += ", ";
            print_to(*n.args[k], out);
          }
          out += ')';
        }
      },
      e.node);
}

double call_builtin(Builtin fn, const double* a) {
  switch (fn) {
    case Builtin::Lin: return lin(a[0], a[1], a[2], a[3], a[4]);
    case Builtin::Clamp: return clamp(a[0], a[1], a[2]);
    case Builtin::Log: return std::log(a[0]);
    case Builtin::Exp: return std::exp(a[0]);
    case Builtin::Pow: return std::pow(a[0], a[1]);
    case Builtin::Abs: return std::fabs(a[0]);
    case Builtin::Floor: return std::floor(a[0]);
    case Builtin::Round: return std::round(a[0]);
  }
  return std::nan("");
}

}  // namespace

std::string_view name(Var v) {
  for (const auto& [n, var] : kVars) {
    if (var == v) return n;
  }
  return "?";
}

std::string_view name(Builtin b) {
  for (const auto& [n, fn, count] : kBuiltins) {
    if (fn == b) return n;
  }
  return "?";
}

std::size_t arity(Builtin b) {
  for (const auto& [n, fn, count] : kBuiltins) {
    if (fn == b) return count;
  }
  return 0;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, Number>) {
          return x.value == y.value || (std::isnan(x.value) && std::isnan(y.value));
        } else if constexpr (std::is_same_v<T, Variable>) {
          return x.var == y.var;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return *x.operand == *y.operand;
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
        } else {
          return x.fn == y.fn && x.args.size() == y.args.size() &&
                 std::equal(x.args.begin(), x.args.end(), y.args.begin(),
                            [](const ExprPtr& p, const ExprPtr& q) { return *p == *q; });
        }
      },
      a.node);
}

ExprPtr number(double v) { return std::make_shared<const Expr>(Expr{Number{v}}); }
ExprPtr variable(Var v) { return std::make_shared<const Expr>(Expr{Variable{v}}); }
ExprPtr negate(ExprPtr e) { return std::make_shared<const Expr>(Expr{Negate{std::move(e)}}); }
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr call(Builtin fn, std::vector<ExprPtr> args) {
  return std::make_shared<const Expr>(Expr{Call{fn, std::move(args)}});
}

ExprPtr parse(std::string_view source) { return Parser(source).parse_all(); }

std::string print(const Expr& e) {
  std::string out;
  print_to(e, out);
  return out;
}

double lin(double v, double a, double b, double c, double d) {
  if (a == b) return (c + d) / 2.0;
  // The general formula can miss d by an ulp at v == b.
  if (v == b) return d;
  return c + (v - a) * (d - c) / (b - a);
}

double clamp(double v, double lo, double hi) {
  if (std::isnan(lo)) lo = -std::numeric_limits<double>::infinity();
  if (std::isnan(hi)) hi = std::numeric_limits<double>::infinity();
  if (lo > hi) std::swap(lo, hi);
  if (std::isnan(v)) return v;
  return v < lo ? lo : (v > hi ? hi : v);
}

Program::Program(const Expr& e) {
  emit(e);
  // Stack high-water mark.
  std::size_t depth = 0;
  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::Const:
      case Op::Load: ++depth; break;
      case Op::Neg: break;
      case Op::Call: depth -= static_cast<std::size_t>(ins.arg) - 1; break;
      default: --depth; break;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void Program::emit(const Expr& e) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Number>) {
          code_.push_back({Op::Const, 0, n.value});
        } else if constexpr (std::is_same_v<T, Variable>) {
          code_.push_back({Op::Load, static_cast<std::uint8_t>(n.var)});
        } else if constexpr (std::is_same_v<T, Negate>) {
          emit(*n.operand);
          code_.push_back({Op::Neg});
        } else if constexpr (std::is_same_v<T, Binary>) {
          emit(*n.lhs);
          emit(*n.rhs);
          static constexpr Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
          code_.push_back({ops[static_cast<int>(n.op)]});
        } else {
          for (const auto& a : n.args) emit(*a);
          code_.push_back({Op::Call, static_cast<std::uint8_t>(n.args.size()),
                           static_cast<double>(static_cast<int>(n.fn))});
        }
      },
      e.node);
}

double Program::run(const EvalEnv& env) const {
  const double vars[] = {env.x, env.i, env.n, env.min, env.max};
  std::vector<double> stack;
  stack.reserve(max_depth_);
  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::Const: stack.push_back(ins.value); break;
      case Op::Load: stack.push_back(vars[ins.arg]); break;
      case Op::Neg: stack.back() = -stack.back(); break;
      case Op::Call: {
        const std::size_t base = stack.size() - ins.arg;
        const double r = call_builtin(static_cast<Builtin>(static_cast<int>(ins.value)), &stack[base]);
        stack.resize(base);
        stack.push_back(r);
        break;
      }
      default: {
        const double rhs = stack.back();
        stack.pop_back();
        double& lhs = stack.back();
        switch (ins.op) {
          case Op::Add: lhs = lhs + rhs; break;
          case Op::Sub: lhs = lhs - rhs; break;
          case Op::Mul: lhs = lhs * rhs; break;
          case Op::Div: lhs = lhs / rhs; break;
          case Op::Pow: lhs = std::pow(lhs, rhs); break;
          default: break;
        }
      }
    }
  }
  return stack.empty() ? std::nan("") : stack.back();
}

double eval(const Expr& e, const EvalEnv& env) { return Program(e).run(env); }

ExprPtr identity_mapping() { return variable(Var::X); }

}  // namespace sonir::dsl
