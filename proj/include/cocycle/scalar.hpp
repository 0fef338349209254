#pragma once

#include <gmp.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace cocycle {

// Arbitrary-precision rational, the coefficient field for exact mode.
// Thin RAII wrapper over GMP's mpq_t; always kept in canonical form.
class Rational {
 public:
  Rational() { mpq_init(q_); }
  Rational(long n) {  // NOLINT: implicit by design, mirrors double literals
    mpq_init(q_);
    mpq_set_si(q_, n, 1);
  }
  Rational(long n, long d) {
    if (d == 0) throw std::domain_error("Rational: zero denominator");
    mpq_init(q_);
    mpq_set_si(q_, n, d);
    mpq_canonicalize(q_);
  }
  Rational(const Rational& o) {
    mpq_init(q_);
    mpq_set(q_, o.q_);
  }
  Rational(Rational&& o) noexcept {
    mpq_init(q_);
    mpq_swap(q_, o.q_);
  }
  Rational& operator=(const Rational& o) {
    if (this != &o) mpq_set(q_, o.q_);
    return *this;
  }
  Rational& operator=(Rational&& o) noexcept {
    if (this != &o) mpq_swap(q_, o.q_);
    return *this;
  }
  ~Rational() { mpq_clear(q_); }

  // Parses "p", "p/q" or a decimal like "-1.25" exactly.
  static Rational parse(const std::string& s) {
    auto dot = s.find('.');
    Rational r;
    if (dot == std::string::npos) {
      std::string t = s.find('/') == std::string::npos ? s + "/1" : s;
      if (mpq_set_str(r.q_, t.c_str(), 10) != 0)
        throw std::invalid_argument("Rational: cannot parse '" + s + "'");
      mpq_canonicalize(r.q_);
      return r;
    }
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::string denom = "1" + std::string(s.size() - dot - 1, '0');
    if (mpq_set_str(r.q_, (digits + "/" + denom).c_str(), 10) != 0)
      throw std::invalid_argument("Rational: cannot parse '" + s + "'");
    mpq_canonicalize(r.q_);
    return r;
  }

  bool isZero() const { return mpq_sgn(q_) == 0; }
  int sign() const { return mpq_sgn(q_); }

  Rational operator-() const {
    Rational r;
    mpq_neg(r.q_, q_);
    return r;
  }
  Rational& operator+=(const Rational& o) {
    mpq_add(q_, q_, o.q_);
    return *this;
  }
  Rational& operator-=(const Rational& o) {
    mpq_sub(q_, q_, o.q_);
    return *this;
  }
  Rational& operator*=(const Rational& o) {
    mpq_mul(q_, q_, o.q_);
    return *this;
  }
  Rational& operator/=(const Rational& o) {
    if (o.isZero()) throw std::domain_error("Rational: division by zero");
    mpq_div(q_, q_, o.q_);
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend bool operator==(const Rational& a, const Rational& b) {
    return mpq_equal(a.q_, b.q_) != 0;
  }
  friend bool operator!=(const Rational& a, const Rational& b) {
    return !(a == b);
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return mpq_cmp(a.q_, b.q_) < 0;
  }

  double toDouble() const { return mpq_get_d(q_); }

  std::string str() const {
    char* c = mpq_get_str(nullptr, 10, q_);
    std::string s(c);
    void (*freefn)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefn);
    freefn(c, s.size() + 1);
    return s;
  }

 private:
  mpq_t q_;
};

// Uniform construction/inspection across the two scalar modes.
template <class S>
struct ScalarOps;

template <>
struct ScalarOps<Rational> {
  static Rational fromRatio(long n, long d) { return Rational(n, d); }
  static bool isZero(const Rational& s) { return s.isZero(); }
  static double toDouble(const Rational& s) { return s.toDouble(); }
  static std::string str(const Rational& s) { return s.str(); }
  static constexpr bool exact = true;
};

template <>
struct ScalarOps<double> {
  static double fromRatio(long n, long d) {
    return static_cast<double>(n) / static_cast<double>(d);
  }
  static bool isZero(double s) { return s == 0.0; }
  static double toDouble(double s) { return s; }
  static std::string str(double s) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.17g", s);
    return buf;
  }
  static constexpr bool exact = false;
};

template <class S>
S sratio(long n, long d = 1) {
  return ScalarOps<S>::fromRatio(n, d);
}

template <class S>
bool is_zero(const S& s) {
  return ScalarOps<S>::isZero(s);
}

template <class S>
S convert_rational(const Rational& r);

template <>
inline Rational convert_rational<Rational>(const Rational& r) {
  return r;
}

template <>
inline double convert_rational<double>(const Rational& r) {
  return r.toDouble();
}

// Value in R + iR; imaginary parts enter only through supertrace prefactors
// (powers of -2i), all core arithmetic stays real.
template <class S>
struct ComplexScalar {
  S re{};
  S im{};
};

// (-2i)^m as (coefficient, which component): m mod 4 selects re/im and sign.
template <class S>
ComplexScalar<S> minus_two_i_pow(int m, const S& value) {
  S c = value;
  for (int j = 0; j < m; ++j) c = c * sratio<S>(2);
  ComplexScalar<S> out;
  switch (((m % 4) + 4) % 4) {
    case 0: out.re = c; break;
    case 1: out.im = -c; break;
    case 2: out.re = -c; break;
    case 3: out.im = c; break;
  }
  return out;
}

}  // namespace cocycle
