#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocycle/jet.hpp"
#include "cocycle/scalar.hpp"

namespace cocycle {

// Closed-form scalar expressions on a coordinate chart.
//
// Grammar (EBNF):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := atom ("^" integer)? | "-" factor
//   atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//
// Variables are x1..xn; functions are sin, cos, exp, sqrt; angles in radians.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Number, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Sqrt };
  Kind kind;
  Rational number{0};
  int var = 0;   // 0-based
  int ipow = 0;  // Pow exponent
  ExprPtr a, b;
};

struct ParseError : std::runtime_error {
  size_t offset;
  ParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " at byte " + std::to_string(off)), offset(off) {}
};

namespace exprs {

inline ExprPtr number(Rational r) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->number = std::move(r);
  return e;
}
inline ExprPtr var(int v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->var = v;
  return e;
}
inline ExprPtr node(Expr::Kind k, ExprPtr a, ExprPtr b = nullptr) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
inline ExprPtr pow(ExprPtr a, int p) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pow;
  e->a = std::move(a);
  e->ipow = p;
  return e;
}

inline ExprPtr add(ExprPtr a, ExprPtr b) { return node(Expr::Kind::Add, a, b); }
inline ExprPtr sub(ExprPtr a, ExprPtr b) { return node(Expr::Kind::Sub, a, b); }
inline ExprPtr mul(ExprPtr a, ExprPtr b) { return node(Expr::Kind::Mul, a, b); }
inline ExprPtr div(ExprPtr a, ExprPtr b) { return node(Expr::Kind::Div, a, b); }
inline ExprPtr neg(ExprPtr a) { return node(Expr::Kind::Neg, a); }

inline bool equal(const ExprPtr& x, const ExprPtr& y) {
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case Expr::Kind::Number: return x->number == y->number;
    case Expr::Kind::Var: return x->var == y->var;
    case Expr::Kind::Pow: return x->ipow == y->ipow && equal(x->a, y->a);
    case Expr::Kind::Neg:
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Exp:
    case Expr::Kind::Sqrt: return equal(x->a, y->a);
    default: return equal(x->a, y->a) && equal(x->b, y->b);
  }
}

namespace detail {

class Parser {
 public:
  Parser(const std::string& src, int nvars) : s_(src), n_(nvars) {}

  ExprPtr run() {
    ExprPtr e = expr();
    skipws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skipws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skipws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skipws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr expr() {
    ExprPtr e = term();
    for (;;) {
      if (eat('+'))
        e = add(e, term());
      else if (eat('-'))
        e = sub(e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    for (;;) {
      if (eat('*'))
        e = mul(e, factor());
      else if (eat('/')) {
        ExprPtr d = factor();
        // fold numeric quotients so printed rationals round-trip; 1/0 is
        // kept unfolded and fails at evaluation
        if (e->kind == Expr::Kind::Number && d->kind == Expr::Kind::Number &&
            !d->number.isZero())
          e = number(e->number / d->number);
        else
          e = div(e, d);
      } else
        return e;
    }
  }

  ExprPtr factor() {
    if (eat('-')) {
      ExprPtr f = factor();
      // fold negated literals so printed rationals round-trip
      if (f->kind == Expr::Kind::Number) return number(-f->number);
      return neg(f);
    }
    ExprPtr a = atom();
    if (eat('^')) return pow(a, integer());
    return a;
  }

  int integer() {
    skipws();
    size_t start = pos_;
    bool negative = eat('-');
    skipws();
    size_t d0 = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == d0) throw ParseError("expected integer exponent", start);
    int v = std::stoi(s_.substr(d0, pos_ - d0));
    return negative ? -v : v;
  }

  ExprPtr atom() {
    skipws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        ++pos_;
      try {
        return number(Rational::parse(s_.substr(start, pos_ - start)));
      } catch (const std::exception&) {
        throw ParseError("malformed number", start);
      }
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                  s_[pos_] == '_'))
        ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (peek() == '(') {
        Expr::Kind k;
        if (id == "sin")
          k = Expr::Kind::Sin;
        else if (id == "cos")
          k = Expr::Kind::Cos;
        else if (id == "exp")
          k = Expr::Kind::Exp;
        else if (id == "sqrt")
          k = Expr::Kind::Sqrt;
        else
          throw ParseError("unknown function '" + id + "'", start);
        eat('(');
        ExprPtr arg = expr();
        if (!eat(')')) throw ParseError("expected ')'", pos_);
        return node(k, arg);
      }
      if (id.size() >= 2 && id[0] == 'x') {
        bool digits = true;
        for (size_t i = 1; i < id.size(); ++i)
          if (!std::isdigit(static_cast<unsigned char>(id[i]))) digits = false;
        if (digits) {
          int v = std::stoi(id.substr(1));
          if (v < 1 || v > n_)
            throw ParseError("unknown variable '" + id + "'", start);
          return var(v - 1);
        }
      }
      throw ParseError("unknown identifier '" + id + "'", start);
    }
    if (eat('(')) {
      ExprPtr e = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  const std::string& s_;
  int n_;
  size_t pos_ = 0;
};

}  // namespace detail

inline ExprPtr parse(const std::string& src, int nvars) {
  return detail::Parser(src, nvars).run();
}

inline std::string print(const ExprPtr& e) {
  auto wrap = [](const std::string& s) { return "(" + s + ")"; };
  switch (e->kind) {
    case Expr::Kind::Number: return e->number.str();
    case Expr::Kind::Var: return "x" + std::to_string(e->var + 1);
    case Expr::Kind::Add: return wrap(print(e->a) + "+" + print(e->b));
    case Expr::Kind::Sub: return wrap(print(e->a) + "-" + print(e->b));
    case Expr::Kind::Mul: return wrap(print(e->a) + "*" + print(e->b));
    case Expr::Kind::Div: return wrap(print(e->a) + "/" + print(e->b));
    case Expr::Kind::Neg: return wrap("-" + print(e->a));
    case Expr::Kind::Pow:
      return wrap(print(e->a) + "^" +
                  (e->ipow < 0 ? wrap(std::to_string(e->ipow)) : std::to_string(e->ipow)));
    case Expr::Kind::Sin: return "sin" + wrap(print(e->a));
    case Expr::Kind::Cos: return "cos" + wrap(print(e->a));
    case Expr::Kind::Exp: return "exp" + wrap(print(e->a));
    case Expr::Kind::Sqrt: return "sqrt" + wrap(print(e->a));
  }
  return "";
}

// Exact symbolic derivative with light constant folding.
inline ExprPtr differentiate(const ExprPtr& e, int v) {
  auto is_const = [](const ExprPtr& x, long k) {
    return x->kind == Expr::Kind::Number && x->number == Rational(k);
  };
  auto A = [&](ExprPtr x, ExprPtr y) {
    if (is_const(x, 0)) return y;
    if (is_const(y, 0)) return x;
    return add(x, y);
  };
  auto M = [&](ExprPtr x, ExprPtr y) {
    if (is_const(x, 0) || is_const(y, 0)) return number(Rational(0));
    if (is_const(x, 1)) return y;
    if (is_const(y, 1)) return x;
    return mul(x, y);
  };
  switch (e->kind) {
    case Expr::Kind::Number: return number(Rational(0));
    case Expr::Kind::Var: return number(Rational(e->var == v ? 1 : 0));
    case Expr::Kind::Add: return A(differentiate(e->a, v), differentiate(e->b, v));
    case Expr::Kind::Sub: {
      ExprPtr db = differentiate(e->b, v);
      if (is_const(db, 0)) return differentiate(e->a, v);
      return sub(differentiate(e->a, v), db);
    }
    case Expr::Kind::Mul:
      return A(M(differentiate(e->a, v), e->b), M(e->a, differentiate(e->b, v)));
    case Expr::Kind::Div:
      // (a/b)' = a'/b - a b'/b^2
      return sub(div(differentiate(e->a, v), e->b),
                 div(M(e->a, differentiate(e->b, v)), pow(e->b, 2)));
    case Expr::Kind::Neg: return neg(differentiate(e->a, v));
    case Expr::Kind::Pow: {
      if (e->ipow == 0) return number(Rational(0));
      ExprPtr base = pow(e->a, e->ipow - 1);
      if (e->ipow == 1) base = number(Rational(1));
      return M(M(number(Rational(e->ipow)), base), differentiate(e->a, v));
    }
    case Expr::Kind::Sin: return M(node(Expr::Kind::Cos, e->a), differentiate(e->a, v));
    case Expr::Kind::Cos:
      return M(neg(node(Expr::Kind::Sin, e->a)), differentiate(e->a, v));
    case Expr::Kind::Exp: return M(node(Expr::Kind::Exp, e->a), differentiate(e->a, v));
    case Expr::Kind::Sqrt:
      // (sqrt a)' = a' / (2 sqrt a)
      return div(differentiate(e->a, v),
                 M(number(Rational(2)), node(Expr::Kind::Sqrt, e->a)));
  }
  return nullptr;
}

// Constant folding over {+,-,*,/,^,neg} and numbers; nullopt otherwise.
inline std::optional<Rational> constant_value(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Number: return e->number;
    case Expr::Kind::Var: return std::nullopt;
    case Expr::Kind::Neg: {
      auto a = constant_value(e->a);
      return a ? std::optional<Rational>(-*a) : std::nullopt;
    }
    case Expr::Kind::Pow: {
      auto a = constant_value(e->a);
      if (!a) return std::nullopt;
      if (e->ipow < 0 && a->isZero()) throw std::domain_error("0 raised to negative power");
      Rational r(1);
      Rational base = e->ipow < 0 ? Rational(1) / *a : *a;
      for (int i = 0; i < std::abs(e->ipow); ++i) r = r * base;
      return r;
    }
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
    case Expr::Kind::Mul:
    case Expr::Kind::Div: {
      auto a = constant_value(e->a), b = constant_value(e->b);
      if (!a || !b) return std::nullopt;
      switch (e->kind) {
        case Expr::Kind::Add: return *a + *b;
        case Expr::Kind::Sub: return *a - *b;
        case Expr::Kind::Mul: return *a * *b;
        default:
          if (b->isZero()) throw std::domain_error("division by zero");
          return *a / *b;
      }
    }
    default: return std::nullopt;
  }
}

namespace detail {

template <class S>
Jet<S> sin_jet(const Jet<S>& u);
template <class S>
Jet<S> cos_jet(const Jet<S>& u);

template <class S>
Jet<S> nilpotent_series(const Jet<S>& u, const std::vector<S>& coeffs) {
  // sum_k coeffs[k] u^k, u with zero constant term
  Jet<S> r = Jet<S>::constant(u.table(), coeffs[0]);
  r.setOrder(u.order());
  Jet<S> p = Jet<S>::constant(u.table(), sratio<S>(1));
  p.setOrder(u.order());
  for (size_t k = 1; k < coeffs.size(); ++k) {
    p = jets::mul(p, u);
    if (p.isZero()) break;
    r = jets::add(r, jets::scale(coeffs[k], p));
  }
  return r;
}

template <class S>
Jet<S> transcendental(const Jet<S>& f, Expr::Kind kind) {
  if constexpr (ScalarOps<S>::exact) {
    throw std::domain_error("rational mode requested for transcendental node");
  } else {
    const MonomialTable& t = f.table();
    double c0 = f[0];
    Jet<S> u = f;
    u[0] = 0.0;
    int K = std::min(f.effOrder(), t.maxOrder());
    std::vector<S> a(K + 1), b(K + 1);
    double fact = 1;
    switch (kind) {
      case Expr::Kind::Exp: {
        for (int k = 0; k <= K; ++k) {
          if (k) fact *= k;
          a[k] = std::exp(c0) / fact;
        }
        return nilpotent_series(u, a);
      }
      case Expr::Kind::Sin:
      case Expr::Kind::Cos: {
        // sin(c0+u) = sin c0 cos u + cos c0 sin u, likewise for cos
        for (int k = 0; k <= K; ++k) {
          if (k) fact *= k;
          double c = 0, s = 0;
          switch (k % 4) {
            case 0: c = 1; break;
            case 1: s = 1; break;
            case 2: c = -1; break;
            case 3: s = -1; break;
          }
          a[k] = s / fact;  // series of sin on nilpotent part
          b[k] = c / fact;  // series of cos on nilpotent part
        }
        Jet<S> su = nilpotent_series(u, a), cu = nilpotent_series(u, b);
        if (kind == Expr::Kind::Sin)
          return jets::add(jets::scale(std::sin(c0), cu), jets::scale(std::cos(c0), su));
        return jets::sub(jets::scale(std::cos(c0), cu), jets::scale(std::sin(c0), su));
      }
      case Expr::Kind::Sqrt: {
        if (!(c0 > 0)) throw std::domain_error("sqrt of non-positive value");
        return jets::exp_log_pow(f, Rational(1, 2));
      }
      default: throw std::logic_error("not a transcendental kind");
    }
  }
}

}  // namespace detail

// Taylor coefficients of e at `point` up to the table order, by Taylor-mode
// propagation through the AST.
template <class S>
Jet<S> taylor_jet(const ExprPtr& e, const std::vector<S>& point,
                  const MonomialTable& tab) {
  switch (e->kind) {
    case Expr::Kind::Number:
      return Jet<S>::constant(tab, convert_rational<S>(e->number));
    case Expr::Kind::Var: {
      if (e->var >= tab.vars()) throw std::domain_error("variable index out of range");
      Jet<S> j = Jet<S>::variable(tab, e->var);
      j[0] = point[e->var];
      return j;
    }
    case Expr::Kind::Add:
      return jets::add(taylor_jet(e->a, point, tab), taylor_jet(e->b, point, tab));
    case Expr::Kind::Sub:
      return jets::sub(taylor_jet(e->a, point, tab), taylor_jet(e->b, point, tab));
    case Expr::Kind::Neg: return jets::neg(taylor_jet(e->a, point, tab));
    case Expr::Kind::Mul:
      return jets::mul(taylor_jet(e->a, point, tab), taylor_jet(e->b, point, tab));
    case Expr::Kind::Div: {
      if constexpr (ScalarOps<S>::exact) {
        auto c = constant_value(e->b);
        if (!c)
          throw std::domain_error("rational mode admits division by constants only");
        if (c->isZero()) throw std::domain_error("division by zero");
        return jets::scale(convert_rational<S>(Rational(1) / *c),
                           taylor_jet(e->a, point, tab));
      } else {
        Jet<S> d = taylor_jet(e->b, point, tab);
        if (is_zero(d[0])) throw std::domain_error("division by zero at expansion point");
        return jets::mul(taylor_jet(e->a, point, tab), jets::inverse(d));
      }
    }
    case Expr::Kind::Pow: {
      Jet<S> base = taylor_jet(e->a, point, tab);
      int p = e->ipow;
      if (p < 0) {
        if constexpr (ScalarOps<S>::exact) {
          auto c = constant_value(e->a);
          if (!c) throw std::domain_error("rational mode admits negative powers of constants only");
          if (c->isZero()) throw std::domain_error("0 raised to negative power");
          Rational r(1);
          for (int i = 0; i < -p; ++i) r = r / *c;
          return Jet<S>::constant(tab, convert_rational<S>(r));
        } else {
          if (is_zero(base[0]))
            throw std::domain_error("negative power at zero of base");
          base = jets::inverse(base);
          p = -p;
        }
      }
      Jet<S> r = Jet<S>::constant(tab, sratio<S>(1));
      Jet<S> sq = base;
      for (int m = p; m > 0; m >>= 1) {
        if (m & 1) r = jets::mul(r, sq);
        if (m > 1) sq = jets::mul(sq, sq);
      }
      return r;
    }
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Exp:
    case Expr::Kind::Sqrt:
      return detail::transcendental(taylor_jet(e->a, point, tab), e->kind);
  }
  throw std::logic_error("unhandled expression kind");
}

// Plain evaluation (float).
inline double evaluate(const ExprPtr& e, const std::vector<double>& point) {
  switch (e->kind) {
    case Expr::Kind::Number: return e->number.toDouble();
    case Expr::Kind::Var: return point[e->var];
    case Expr::Kind::Add: return evaluate(e->a, point) + evaluate(e->b, point);
    case Expr::Kind::Sub: return evaluate(e->a, point) - evaluate(e->b, point);
    case Expr::Kind::Mul: return evaluate(e->a, point) * evaluate(e->b, point);
    case Expr::Kind::Div: {
      double d = evaluate(e->b, point);
      if (d == 0) throw std::domain_error("division by zero");
      return evaluate(e->a, point) / d;
    }
    case Expr::Kind::Neg: return -evaluate(e->a, point);
    case Expr::Kind::Pow: return std::pow(evaluate(e->a, point), e->ipow);
    case Expr::Kind::Sin: return std::sin(evaluate(e->a, point));
    case Expr::Kind::Cos: return std::cos(evaluate(e->a, point));
    case Expr::Kind::Exp: return std::exp(evaluate(e->a, point));
    case Expr::Kind::Sqrt: return std::sqrt(evaluate(e->a, point));
  }
  return 0;
}

}  // namespace exprs

}  // namespace cocycle
