#pragma once

// Small deterministic arithmetic expression language over named real variables.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' exponent)?        right associative
//   exponent:= '-' exponent | power            must be variable free
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//            | 'integral' '(' expr ',' name ',' expr ',' expr ')'
//
// integral(f, s, a, b) is the definite integral of f over the dummy s from the
// constant a to the expression b. f may only depend on s.

#include "accr/jet.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace accr {

enum class Fn { Sin, Cos, Tan, Sinh, Cosh, Tanh, Exp, Ln, Sqrt, Arctan, Arcsin };

inline const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Tan: return "tan";
    case Fn::Sinh: return "sinh";
    case Fn::Cosh: return "cosh";
    case Fn::Tanh: return "tanh";
    case Fn::Exp: return "exp";
    case Fn::Ln: return "ln";
    case Fn::Sqrt: return "sqrt";
    case Fn::Arctan: return "arctan";
    case Fn::Arcsin: return "arcsin";
  }
  return "?";
}

inline bool fn_from_name(std::string_view s, Fn& out) {
  static const std::pair<std::string_view, Fn> table[] = {
      {"sin", Fn::Sin},   {"cos", Fn::Cos},   {"tan", Fn::Tan},       {"sinh", Fn::Sinh},
      {"cosh", Fn::Cosh}, {"tanh", Fn::Tanh}, {"exp", Fn::Exp},       {"ln", Fn::Ln},
      {"sqrt", Fn::Sqrt}, {"arctan", Fn::Arctan}, {"arcsin", Fn::Arcsin}};
  for (const auto& [name, f] : table)
    if (name == s) {
      out = f;
      return true;
    }
  return false;
}

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t offset, std::string expected, std::string found)
      : std::runtime_error("parse error at offset " + std::to_string(offset) + ": expected " + expected + ", found " +
                           found),
        offset_(offset),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

private:
  std::size_t offset_;
  std::string expected_;
  std::string found_;
};

class UnboundVariable : public std::runtime_error {
public:
  explicit UnboundVariable(const std::string& name) : std::runtime_error("unbound variable '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

private:
  std::string name_;
};

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Func, Integral };

class Expr;

namespace detail {
struct Node;
}

/// Immutable expression handle. Copies share the underlying tree.
class Expr {
public:
  Expr();  // the constant 0

  Op op() const;
  double value() const;         // Const value, Pow exponent, Integral lower bound
  const std::string& name() const;  // Var name, Integral dummy
  Fn fn() const;
  const Expr& lhs() const;  // unary operand, binary left, Pow base, Integral integrand
  const Expr& rhs() const;  // binary right, Pow exponent tree, Integral upper limit
  const detail::Node* node() const { return node_.get(); }

  bool is_const() const { return op() == Op::Const; }
  bool is_const(double v) const { return op() == Op::Const && value() == v; }

  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}

private:
  std::shared_ptr<const detail::Node> node_;
};

namespace detail {
struct Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  Fn fn = Fn::Sin;
  Expr a, b;
  Node() = default;
};

inline Expr make(Op op, double value, std::string name, Fn fn, Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->name = std::move(name);
  n->fn = fn;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}
}  // namespace detail

// A default-constructed handle has no node and reads as the constant 0.
inline Expr::Expr() = default;
inline Op Expr::op() const { return node_ ? node_->op : Op::Const; }
inline double Expr::value() const { return node_ ? node_->value : 0.0; }
inline const std::string& Expr::name() const {
  static const std::string empty;
  return node_ ? node_->name : empty;
}
inline Fn Expr::fn() const { return node_ ? node_->fn : Fn::Sin; }
inline const Expr& Expr::lhs() const {
  static const Expr none;
  return node_ ? node_->a : none;
}
inline const Expr& Expr::rhs() const {
  static const Expr none;
  return node_ ? node_->b : none;
}

std::set<std::string> free_vars(const Expr& e);

// ---------------------------------------------------------------------------
// Raw constructors: build exactly the requested node.

namespace raw {
inline Expr constant(double v) { return detail::make(Op::Const, v, {}, Fn::Sin, {}, {}); }
inline Expr variable(std::string name) { return detail::make(Op::Var, 0.0, std::move(name), Fn::Sin, {}, {}); }
inline Expr neg(Expr a) { return detail::make(Op::Neg, 0.0, {}, Fn::Sin, std::move(a), {}); }
inline Expr binary(Op op, Expr a, Expr b) { return detail::make(op, 0.0, {}, Fn::Sin, std::move(a), std::move(b)); }
inline Expr func(Fn f, Expr a) { return detail::make(Op::Func, 0.0, {}, f, std::move(a), {}); }
}  // namespace raw

double eval(const Expr& e, const std::map<std::string, double>& bindings);

namespace raw {
/// Pow node; the exponent tree must be variable free.
inline Expr power(Expr base, Expr exponent) {
  if (!free_vars(exponent).empty()) throw std::invalid_argument("exponent must be a constant expression");
  const double p = eval(exponent, {});
  return detail::make(Op::Pow, p, {}, Fn::Sin, std::move(base), std::move(exponent));
}
inline Expr integral(Expr integrand, std::string dummy, Expr lower, Expr upper) {
  if (!free_vars(lower).empty()) throw std::invalid_argument("integral lower bound must be a constant expression");
  for (const auto& v : free_vars(integrand))
    if (v != dummy) throw std::invalid_argument("integrand may only depend on the integration variable");
  const double lo = eval(lower, {});
  // the lower-bound tree is kept only through its value; serialization prints it with %.17g
  return detail::make(Op::Integral, lo, std::move(dummy), Fn::Sin, std::move(integrand), std::move(upper));
}
}  // namespace raw

// ---------------------------------------------------------------------------
// Folding constructors used when composing expressions programmatically.

inline Expr constant(double v) { return raw::constant(v); }
inline Expr variable(std::string name) { return raw::variable(std::move(name)); }

inline Expr operator-(const Expr& a) {
  if (a.is_const()) return constant(-a.value());
  if (a.op() == Op::Neg) return a.lhs();
  return raw::neg(a);
}
inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.value() + b.value());
  if (a.is_const(0.0)) return b;
  if (b.is_const(0.0)) return a;
  return raw::binary(Op::Add, a, b);
}
inline Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.value() - b.value());
  if (b.is_const(0.0)) return a;
  if (a.is_const(0.0)) return -b;
  return raw::binary(Op::Sub, a, b);
}
inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const()) return constant(a.value() * b.value());
  if (a.is_const(0.0) || b.is_const(0.0)) return constant(0.0);
  if (a.is_const(1.0)) return b;
  if (b.is_const(1.0)) return a;
  if (a.is_const(-1.0)) return -b;
  if (b.is_const(-1.0)) return -a;
  return raw::binary(Op::Mul, a, b);
}
inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_const() && b.is_const() && b.value() != 0.0) return constant(a.value() * (1.0 / b.value()));
  if (a.is_const(0.0) && !b.is_const(0.0)) return constant(0.0);
  if (b.is_const(1.0)) return a;
  return raw::binary(Op::Div, a, b);
}
inline Expr operator+(const Expr& a, double b) { return a + constant(b); }
inline Expr operator+(double a, const Expr& b) { return constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - constant(b); }
inline Expr operator-(double a, const Expr& b) { return constant(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * constant(b); }
inline Expr operator*(double a, const Expr& b) { return constant(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / constant(b); }
inline Expr operator/(double a, const Expr& b) { return constant(a) / b; }

Expr func(Fn f, const Expr& a);

inline Expr pow(const Expr& a, double p) {
  if (p == 1.0) return a;
  if (p == 0.0) return constant(1.0);
  if (a.is_const()) return constant(eval(raw::power(a, constant(p)), {}));
  Expr ex = p < 0 ? raw::neg(raw::constant(-p)) : raw::constant(p);
  return raw::power(a, ex);
}

inline Expr sin(const Expr& a) { return func(Fn::Sin, a); }
inline Expr cos(const Expr& a) { return func(Fn::Cos, a); }
inline Expr tan(const Expr& a) { return func(Fn::Tan, a); }
inline Expr sinh(const Expr& a) { return func(Fn::Sinh, a); }
inline Expr cosh(const Expr& a) { return func(Fn::Cosh, a); }
inline Expr tanh(const Expr& a) { return func(Fn::Tanh, a); }
inline Expr exp(const Expr& a) { return func(Fn::Exp, a); }
inline Expr log(const Expr& a) { return func(Fn::Ln, a); }
inline Expr sqrt(const Expr& a) { return func(Fn::Sqrt, a); }
inline Expr atan(const Expr& a) { return func(Fn::Arctan, a); }
inline Expr asin(const Expr& a) { return func(Fn::Arcsin, a); }

/// Definite integral of `integrand(dummy)` from `lower` to `upper`.
inline Expr integral(const Expr& integrand, const std::string& dummy, double lower, const Expr& upper) {
  Expr lo = lower < 0 ? raw::neg(raw::constant(-lower)) : raw::constant(lower);
  return raw::integral(integrand, dummy, lo, upper);
}

// ---------------------------------------------------------------------------
// Scalar kernels shared by plain and jet evaluation so the order-0 results agree bit for bit.

namespace detail {

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

inline double ipow(double x, int p) {
  if (p < 0) return 1.0 / ipow(x, -p);
  double result = 1.0, base = x;
  for (unsigned e = static_cast<unsigned>(p); e != 0; e >>= 1) {
    if (e & 1u) result = result * base;
    if (e > 1) base = base * base;
  }
  return result;
}

inline bool integer_exponent(double p) {
  return p == std::floor(p) && std::fabs(p) < 2147483647.0;
}

template <class T>
T apply_fn(Fn f, const T& x) {
  const double v = value_of(x);
  switch (f) {
    case Fn::Ln:
      if (!(v > 0.0)) throw DomainError("ln: nonpositive argument");
      break;
    case Fn::Sqrt:
      if (!(v > 0.0)) throw DomainError("sqrt: nonpositive argument");
      break;
    case Fn::Arcsin:
      if (!(v >= -1.0 && v <= 1.0)) throw DomainError("arcsin: argument outside [-1, 1]");
      break;
    default:
      break;
  }
  if constexpr (std::is_same_v<T, double>) {
    switch (f) {
      case Fn::Sin: return std::sin(v);
      case Fn::Cos: return std::cos(v);
      case Fn::Tan: return std::tan(v);
      case Fn::Sinh: return std::sinh(v);
      case Fn::Cosh: return std::cosh(v);
      case Fn::Tanh: return std::tanh(v);
      case Fn::Exp: return std::exp(v);
      case Fn::Ln: return std::log(v);
      case Fn::Sqrt: return std::sqrt(v);
      case Fn::Arctan: return std::atan(v);
      case Fn::Arcsin: return std::asin(v);
    }
    return 0.0;
  } else {
    if (f == Fn::Arcsin && x.order() == 0) return Jet(x.space(), std::asin(v));
    switch (f) {
      case Fn::Sin: return accr::sin(x);
      case Fn::Cos: return accr::cos(x);
      case Fn::Tan: return accr::tan(x);
      case Fn::Sinh: return accr::sinh(x);
      case Fn::Cosh: return accr::cosh(x);
      case Fn::Tanh: return accr::tanh(x);
      case Fn::Exp: return accr::exp(x);
      case Fn::Ln: return accr::log(x);
      case Fn::Sqrt: return accr::sqrt(x);
      case Fn::Arctan: return accr::atan(x);
      case Fn::Arcsin: return accr::asin(x);
    }
    return x;
  }
}

inline double quadrature(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  // tighter tolerances make the adaptive refinement chase roundoff
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 64 * std::numeric_limits<double>::epsilon(), &err);
}

}  // namespace detail

/// Evaluates expressions over a fixed set of bindings; shared subtrees are evaluated once.
template <class T>
class Evaluator {
public:
  using Bindings = std::map<std::string, T, std::less<>>;

  explicit Evaluator(Bindings bindings, JetSpace space = {}) : bindings_(std::move(bindings)), space_(space) {
    if constexpr (std::is_same_v<T, Jet>) {
      if (!bindings_.empty()) space_ = bindings_.begin()->second.space();
      for (const auto& [k, v] : bindings_)
        if (!(v.space() == space_)) throw std::invalid_argument("evaluator: bindings have mismatched jet spaces");
    }
  }

  T operator()(const Expr& e) { return eval(e); }

  T eval(const Expr& e) {
    auto it = cache_.find(e.node());
    if (it != cache_.end()) return it->second.second;
    T r = compute(e);
    cache_.emplace(e.node(), std::pair<Expr, T>(e, r));
    return r;
  }

  const Bindings& bindings() const { return bindings_; }

private:
  T make_const(double c) const {
    if constexpr (std::is_same_v<T, Jet>) return Jet(space_, c);
    else return c;
  }

  T compute(const Expr& e) {
    switch (e.op()) {
      case Op::Const: return make_const(e.value());
      case Op::Var: {
        auto it = bindings_.find(e.name());
        if (it == bindings_.end()) throw UnboundVariable(e.name());
        return it->second;
      }
      case Op::Neg: return -eval(e.lhs());
      case Op::Add: return eval(e.lhs()) + eval(e.rhs());
      case Op::Sub: return eval(e.lhs()) - eval(e.rhs());
      case Op::Mul: return eval(e.lhs()) * eval(e.rhs());
      case Op::Div: {
        T den = eval(e.rhs());
        if (detail::value_of(den) == 0.0) throw DomainError("division by zero");
        if constexpr (std::is_same_v<T, Jet>) return eval(e.lhs()) * reciprocal(den);
        else return eval(e.lhs()) * (1.0 / den);
      }
      case Op::Pow: {
        T base = eval(e.lhs());
        const double p = e.value();
        if (detail::integer_exponent(p)) {
          if (p < 0 && detail::value_of(base) == 0.0) throw DomainError("division by zero");
          if constexpr (std::is_same_v<T, Jet>) return accr::pow(base, static_cast<int>(p));
          else return detail::ipow(base, static_cast<int>(p));
        }
        if (!(detail::value_of(base) > 0.0)) throw DomainError("pow: non-integer exponent requires a positive base");
        if constexpr (std::is_same_v<T, Jet>) return accr::pow(base, p);
        else return std::pow(base, p);
      }
      case Op::Func: return detail::apply_fn(e.fn(), eval(e.lhs()));
      case Op::Integral: return integral(e);
    }
    throw std::logic_error("evaluator: unknown node");
  }

  T integral(const Expr& e) {
    T upper = eval(e.rhs());
    const Expr& f = e.lhs();
    const std::string& s = e.name();
    const double x0 = detail::value_of(upper);
    auto integrand = [&](double x) {
      Evaluator<double> inner({{s, x}});
      return inner(f);
    };
    const double p0 = detail::quadrature(integrand, e.value(), x0);
    if constexpr (std::is_same_v<T, Jet>) {
      std::vector<double> series{p0};
      if (upper.order() >= 1) {
        Evaluator<Jet> inner({{s, Jet::variable(0, x0, {1, upper.order() - 1})}});
        const Jet fj = inner(f);
        for (std::size_t k = 0; k < fj.size(); ++k) series.push_back(fj.coefficient(k) / static_cast<double>(k + 1));
      }
      return upper.compose(series);
    } else {
      return p0;
    }
  }

  Bindings bindings_;
  JetSpace space_;
  // keys stay alive through the stored handle
  std::unordered_map<const detail::Node*, std::pair<Expr, T>> cache_;
};

inline double eval(const Expr& e, const std::map<std::string, double>& bindings) {
  Evaluator<double> ev(Evaluator<double>::Bindings(bindings.begin(), bindings.end()));
  return ev(e);
}

inline Jet eval(const Expr& e, const std::map<std::string, Jet>& bindings, JetSpace space = {}) {
  Evaluator<Jet> ev(Evaluator<Jet>::Bindings(bindings.begin(), bindings.end()), space);
  return ev(e);
}

inline Expr func(Fn f, const Expr& a) {
  if (a.is_const()) {
    try {
      return constant(detail::apply_fn(f, a.value()));
    } catch (const DomainError&) {
      // leave unfolded; the error surfaces at evaluation
    }
  }
  return raw::func(f, a);
}

// ---------------------------------------------------------------------------

inline void collect_free_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.op()) {
    case Op::Const: return;
    case Op::Var: out.insert(e.name()); return;
    case Op::Neg:
    case Op::Func: collect_free_vars(e.lhs(), out); return;
    case Op::Pow: collect_free_vars(e.lhs(), out); return;
    case Op::Integral: collect_free_vars(e.rhs(), out); return;
    default:
      collect_free_vars(e.lhs(), out);
      collect_free_vars(e.rhs(), out);
  }
}

inline std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_free_vars(e, out);
  return out;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Const: return std::bit_cast<std::uint64_t>(a.value()) == std::bit_cast<std::uint64_t>(b.value());
    case Op::Var: return a.name() == b.name();
    case Op::Neg: return structurally_equal(a.lhs(), b.lhs());
    case Op::Func: return a.fn() == b.fn() && structurally_equal(a.lhs(), b.lhs());
    case Op::Integral:
      return a.name() == b.name() && a.value() == b.value() && structurally_equal(a.lhs(), b.lhs()) &&
             structurally_equal(a.rhs(), b.rhs());
    default: return structurally_equal(a.lhs(), b.lhs()) && structurally_equal(a.rhs(), b.rhs());
  }
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Canonical fully parenthesized text form.
inline void serialize_to(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const:
      if (std::signbit(e.value())) {
        out += "(-";
        out += format_number(-e.value());
        out += ")";
      } else {
        out += format_number(e.value());
      }
      return;
    case Op::Var: out += e.name(); return;
    case Op::Neg:
      out += "(-";
      serialize_to(e.lhs(), out);
      out += ")";
      return;
    case Op::Func:
      out += fn_name(e.fn());
      out += "(";
      serialize_to(e.lhs(), out);
      out += ")";
      return;
    case Op::Pow:
      out += "(";
      serialize_to(e.lhs(), out);
      out += "^";
      serialize_to(e.rhs(), out);
      out += ")";
      return;
    case Op::Integral:
      out += "integral(";
      serialize_to(e.lhs(), out);
      out += ", " + e.name() + ", ";
      serialize_to(constant(e.value()), out);
      out += ", ";
      serialize_to(e.rhs(), out);
      out += ")";
      return;
    default: {
      const char* sym = e.op() == Op::Add ? " + " : e.op() == Op::Sub ? " - " : e.op() == Op::Mul ? " * " : " / ";
      out += "(";
      serialize_to(e.lhs(), out);
      out += sym;
      serialize_to(e.rhs(), out);
      out += ")";
    }
  }
}

inline std::string serialize(const Expr& e) {
  std::string out;
  serialize_to(e, out);
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << serialize(e); }

// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ < s_.size()) fail("operator or end of input");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& expected) const { throw ParseError(pos_, expected, describe()); }

  std::string describe() const {
    if (pos_ >= s_.size()) return "end of input";
    const unsigned char c = static_cast<unsigned char>(s_[pos_]);
    if (c < 0x20 || c >= 0x7f) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "byte 0x%02x", c);
      return buf;
    }
    return std::string("'") + s_[pos_] + "'";
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("'") + c + "'");
  }

  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  std::string identifier() {
    skip_ws();
    if (pos_ >= s_.size() || !is_alpha(s_[pos_])) fail("identifier");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (is_alpha(s_[pos_]) || is_digit(s_[pos_]) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) lhs = raw::binary(Op::Add, lhs, term());
      else if (accept('-')) lhs = raw::binary(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = raw::binary(Op::Mul, lhs, unary());
      else if (accept('/')) lhs = raw::binary(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) return raw::neg(unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip_ws();
    if (accept('^')) {
      const std::size_t at = pos_;
      Expr ex = exponent();
      if (!free_vars(ex).empty()) throw ParseError(at, "constant exponent", "variable expression");
      return raw::power(base, ex);
    }
    return base;
  }

  Expr exponent() {
    if (accept('-')) return raw::neg(exponent());
    return power();
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
    bool digits = pos_ > start;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      const std::size_t frac = pos_;
      while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
      digits = digits || pos_ > frac;
    }
    if (!digits) fail("number");
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      const std::size_t ex = pos_;
      while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
      if (pos_ == ex) fail("exponent digits");
    }
    const std::string lexeme(s_.substr(start, pos_ - start));
    return raw::constant(std::strtod(lexeme.c_str(), nullptr));
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("expression");
    const char c = s_[pos_];
    if (is_digit(c) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (is_alpha(c)) {
      const std::size_t start = pos_;
      std::string name = identifier();
      Fn f;
      if (name == "integral") {
        expect('(');
        Expr integrand = expr();
        expect(',');
        std::string dummy = identifier();
        expect(',');
        const std::size_t lo_at = pos_;
        Expr lower = expr();
        expect(',');
        Expr upper = expr();
        expect(')');
        if (!free_vars(lower).empty()) throw ParseError(lo_at, "constant lower bound", "variable expression");
        for (const auto& v : free_vars(integrand))
          if (v != dummy) throw ParseError(start, "integrand depending only on '" + dummy + "'", "variable '" + v + "'");
        return raw::integral(integrand, dummy, lower, upper);
      }
      if (fn_from_name(name, f)) {
        expect('(');
        Expr arg = expr();
        expect(')');
        return raw::func(f, arg);
      }
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '(') throw ParseError(start, "known function", "'" + name + "'");
      return raw::variable(std::move(name));
    }
    fail("expression");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `text`; throws ParseError on malformed input.
inline Expr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Symbolic support used to derive chart fields from embeddings.

Expr substitute(const Expr& e, const std::string& name, const Expr& replacement);

namespace detail {

using ExprMemo = std::unordered_map<const Node*, std::pair<Expr, Expr>>;

inline Expr substitute_impl(const Expr& e, const std::string& name, const Expr& repl,
                            ExprMemo& memo) {
  auto it = memo.find(e.node());
  if (it != memo.end()) return it->second.second;
  Expr r;
  switch (e.op()) {
    case Op::Const: r = e; break;
    case Op::Var: r = e.name() == name ? repl : e; break;
    case Op::Neg: r = -substitute_impl(e.lhs(), name, repl, memo); break;
    case Op::Add: r = substitute_impl(e.lhs(), name, repl, memo) + substitute_impl(e.rhs(), name, repl, memo); break;
    case Op::Sub: r = substitute_impl(e.lhs(), name, repl, memo) - substitute_impl(e.rhs(), name, repl, memo); break;
    case Op::Mul: r = substitute_impl(e.lhs(), name, repl, memo) * substitute_impl(e.rhs(), name, repl, memo); break;
    case Op::Div: r = substitute_impl(e.lhs(), name, repl, memo) / substitute_impl(e.rhs(), name, repl, memo); break;
    case Op::Pow: r = pow(substitute_impl(e.lhs(), name, repl, memo), e.value()); break;
    case Op::Func: r = func(e.fn(), substitute_impl(e.lhs(), name, repl, memo)); break;
    case Op::Integral:
      // the integrand is closed over its dummy; only the upper limit sees the substitution
      r = integral(e.lhs(), e.name(), e.value(), substitute_impl(e.rhs(), name, repl, memo));
      break;
  }
  memo.emplace(e.node(), std::pair<Expr, Expr>(e, r));
  return r;
}

inline Expr diff_impl(const Expr& e, const std::string& x, ExprMemo& memo) {
  auto it = memo.find(e.node());
  if (it != memo.end()) return it->second.second;
  auto d = [&](const Expr& s) { return diff_impl(s, x, memo); };
  Expr r;
  switch (e.op()) {
    case Op::Const: r = constant(0.0); break;
    case Op::Var: r = constant(e.name() == x ? 1.0 : 0.0); break;
    case Op::Neg: r = -d(e.lhs()); break;
    case Op::Add: r = d(e.lhs()) + d(e.rhs()); break;
    case Op::Sub: r = d(e.lhs()) - d(e.rhs()); break;
    case Op::Mul: r = d(e.lhs()) * e.rhs() + e.lhs() * d(e.rhs()); break;
    case Op::Div: r = d(e.lhs()) / e.rhs() - e.lhs() * d(e.rhs()) / pow(e.rhs(), 2.0); break;
    case Op::Pow: r = e.value() * pow(e.lhs(), e.value() - 1.0) * d(e.lhs()); break;
    case Op::Func: {
      const Expr& a = e.lhs();
      const Expr da = d(a);
      if (da.is_const(0.0)) {
        r = constant(0.0);
        break;
      }
      switch (e.fn()) {
        case Fn::Sin: r = cos(a) * da; break;
        case Fn::Cos: r = -(sin(a) * da); break;
        case Fn::Tan: r = (1.0 + pow(e, 2.0)) * da; break;
        case Fn::Sinh: r = cosh(a) * da; break;
        case Fn::Cosh: r = sinh(a) * da; break;
        case Fn::Tanh: r = (1.0 - pow(e, 2.0)) * da; break;
        case Fn::Exp: r = e * da; break;
        case Fn::Ln: r = da / a; break;
        case Fn::Sqrt: r = da / (2.0 * e); break;
        case Fn::Arctan: r = da / (1.0 + pow(a, 2.0)); break;
        case Fn::Arcsin: r = da / sqrt(1.0 - pow(a, 2.0)); break;
      }
      break;
    }
    case Op::Integral: {
      const Expr du = d(e.rhs());
      r = du.is_const(0.0) ? constant(0.0) : substitute(e.lhs(), e.name(), e.rhs()) * du;
      break;
    }
  }
  memo.emplace(e.node(), std::pair<Expr, Expr>(e, r));
  return r;
}

}  // namespace detail

inline Expr substitute(const Expr& e, const std::string& name, const Expr& replacement) {
  detail::ExprMemo memo;
  return detail::substitute_impl(e, name, replacement, memo);
}

/// Symbolic partial derivative with light constant folding.
inline Expr diff(const Expr& e, const std::string& x) {
  detail::ExprMemo memo;
  return detail::diff_impl(e, x, memo);
}

/// Memoizing differentiator for many derivatives of related expressions.
class Differentiator {
public:
  explicit Differentiator(std::string var) : var_(std::move(var)) {}
  Expr operator()(const Expr& e) { return detail::diff_impl(e, var_, memo_); }

private:
  std::string var_;
  detail::ExprMemo memo_;
};

}  // namespace accr
