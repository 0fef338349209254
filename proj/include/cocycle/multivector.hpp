#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cocycle/scalar.hpp"

namespace cocycle {

// Blade masks: bit i set means the factor e_{i+1} is present, factors in
// increasing index order.
namespace blades {

inline int grade(uint32_t m) { return std::popcount(m); }

// Parity sign of sorting the concatenation (a, b) into canonical order.
inline int reorder_sign(uint32_t a, uint32_t b) {
  int swaps = 0;
  for (uint32_t t = b; t; t &= t - 1) {
    int j = std::countr_zero(t);
    swaps += std::popcount(a >> (j + 1));
  }
  return (swaps & 1) ? -1 : 1;
}

// e_S e_T in Cl(R^n) with e_i^2 = -1; result blade is S xor T.
inline int clifford_sign(uint32_t a, uint32_t b) {
  int s = reorder_sign(a, b);
  if (std::popcount(a & b) & 1) s = -s;
  return s;
}

}  // namespace blades

// Element of Lambda(R^n), n even, 2 <= n <= 8, identified with Cl(R^n) via
// the Clifford symbol map. Sparse: sorted (blade, coefficient), no zeros.
template <class S>
class Multivector {
 public:
  explicit Multivector(int n) : n_(n) { check_dim(n); }

  static Multivector scalar(int n, S v) { return blade_term(n, 0u, std::move(v)); }
  static Multivector basis_vector(int n, int i) {
    return blade_term(n, 1u << i, sratio<S>(1));
  }
  static Multivector blade_term(int n, uint32_t mask, S v) {
    Multivector m(n);
    if (mask >= (1u << n)) throw std::invalid_argument("blade outside dimension");
    if (!is_zero(v)) m.c_.emplace_back(mask, std::move(v));
    return m;
  }

  int dim() const { return n_; }
  bool isZero() const { return c_.empty(); }
  const std::vector<std::pair<uint32_t, S>>& terms() const { return c_; }

  S coeff(uint32_t mask) const {
    for (const auto& [b, v] : c_)
      if (b == mask) return v;
    return S{};
  }

  int maxGrade() const {
    int g = 0;
    for (const auto& [b, v] : c_) g = std::max(g, blades::grade(b));
    return g;
  }

  // true if every term has grade of the given parity (0 even / 1 odd)
  bool hasParity(int parity) const {
    for (const auto& [b, v] : c_)
      if ((blades::grade(b) & 1) != parity) return false;
    return true;
  }

  friend bool operator==(const Multivector& a, const Multivector& b) {
    return a.n_ == b.n_ && a.c_ == b.c_;
  }
  friend bool operator!=(const Multivector& a, const Multivector& b) {
    return !(a == b);
  }

  // Accumulation helper used by all products.
  class Accum {
   public:
    explicit Accum(int n) : n_(n), buf_(size_t(1) << n, S{}) {}
    void add(uint32_t mask, const S& v) { buf_[mask] += v; }
    Multivector take() {
      Multivector m(n_);
      for (uint32_t b = 0; b < buf_.size(); ++b)
        if (!is_zero(buf_[b])) m.c_.emplace_back(b, std::move(buf_[b]));
      return m;
    }

   private:
    int n_;
    std::vector<S> buf_;
  };

 private:
  static void check_dim(int n) {
    if (n < 2 || n > 8) throw std::invalid_argument("dimension must be in [2,8]");
  }
  int n_;
  std::vector<std::pair<uint32_t, S>> c_;
};

template <class S>
void check_same_dim(const Multivector<S>& a, const Multivector<S>& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
}

template <class S>
Multivector<S> operator+(const Multivector<S>& a, const Multivector<S>& b) {
  check_same_dim(a, b);
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [m, v] : a.terms()) acc.add(m, v);
  for (const auto& [m, v] : b.terms()) acc.add(m, v);
  return acc.take();
}

template <class S>
Multivector<S> operator-(const Multivector<S>& a) {
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [m, v] : a.terms()) acc.add(m, -v);
  return acc.take();
}

template <class S>
Multivector<S> operator-(const Multivector<S>& a, const Multivector<S>& b) {
  return a + (-b);
}

template <class S>
Multivector<S> operator*(const S& s, const Multivector<S>& a) {
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [m, v] : a.terms()) acc.add(m, s * v);
  return acc.take();
}

template <class S>
Multivector<S> grade_part(const Multivector<S>& a, int k) {
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [m, v] : a.terms())
    if (blades::grade(m) == k) acc.add(m, v);
  return acc.take();
}

// Exterior product.
template <class S>
Multivector<S> wedge(const Multivector<S>& a, const Multivector<S>& b) {
  check_same_dim(a, b);
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [ma, va] : a.terms())
    for (const auto& [mb, vb] : b.terms()) {
      if (ma & mb) continue;
      S p = va * vb;
      if (blades::reorder_sign(ma, mb) < 0) p = -p;
      acc.add(ma | mb, p);
    }
  return acc.take();
}

// Clifford product for the convention v^2 = -|v|^2; on symbols
// c(v) = eps(v) - iota(v).
template <class S>
Multivector<S> clifford(const Multivector<S>& a, const Multivector<S>& b) {
  check_same_dim(a, b);
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [ma, va] : a.terms())
    for (const auto& [mb, vb] : b.terms()) {
      S p = va * vb;
      if (blades::clifford_sign(ma, mb) < 0) p = -p;
      acc.add(ma ^ mb, p);
    }
  return acc.take();
}

// Contraction iota(v) by a grade-1 element, graded derivation of degree -1
// with iota(e_i)e_j = delta_ij.
template <class S>
Multivector<S> contract(const Multivector<S>& v, const Multivector<S>& a) {
  check_same_dim(v, a);
  if (!v.isZero() && (v.maxGrade() != 1 || !v.hasParity(1)))
    throw std::invalid_argument("contract: left argument must have grade 1");
  typename Multivector<S>::Accum acc(a.dim());
  for (const auto& [mv, cv] : v.terms()) {
    for (const auto& [ma, ca] : a.terms()) {
      if (!(ma & mv)) continue;
      int i = std::countr_zero(mv);
      int pos = std::popcount(ma & ((1u << i) - 1));
      S p = cv * ca;
      if (pos & 1) p = -p;
      acc.add(ma & ~mv, p);
    }
  }
  return acc.take();
}

// Berezin integral: coefficient of e_1 ^ ... ^ e_n.
template <class S>
S berezin(const Multivector<S>& a) {
  return a.coeff((1u << a.dim()) - 1);
}

// Pointwise supertrace of the Clifford symbol: tr_s = (-2i)^{n/2} Berezin.
template <class S>
ComplexScalar<S> supertrace(const Multivector<S>& a) {
  int n = a.dim();
  if (n % 2) throw std::invalid_argument("supertrace needs even dimension");
  return minus_two_i_pow<S>(n / 2, berezin(a));
}

// n x n antisymmetric matrix of multivectors; carries curvature-type data
// (entry (a,b) is the form with value g(M(.)e_{a+1}, e_{b+1})).
template <class S>
class FormMatrix {
 public:
  FormMatrix(int n, int dim)
      : n_(n), dim_(dim), e_(size_t(n) * n, Multivector<S>(dim)) {}
  explicit FormMatrix(int n) : FormMatrix(n, n) {}

  int size() const { return n_; }
  int dim() const { return dim_; }
  const Multivector<S>& at(int a, int b) const { return e_[size_t(a) * n_ + b]; }
  Multivector<S>& at(int a, int b) { return e_[size_t(a) * n_ + b]; }

  bool isAntisymmetric() const {
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b <= a; ++b)
        if (!(at(a, b) == -at(b, a))) return false;
    return true;
  }

  friend bool operator==(const FormMatrix& x, const FormMatrix& y) {
    return x.n_ == y.n_ && x.e_ == y.e_;
  }

 private:
  int n_, dim_;
  std::vector<Multivector<S>> e_;
};

template <class S>
FormMatrix<S> operator+(const FormMatrix<S>& x, const FormMatrix<S>& y) {
  FormMatrix<S> r(x.size(), x.dim());
  for (int a = 0; a < x.size(); ++a)
    for (int b = 0; b < x.size(); ++b) r.at(a, b) = x.at(a, b) + y.at(a, b);
  return r;
}

template <class S>
FormMatrix<S> operator-(const FormMatrix<S>& x, const FormMatrix<S>& y) {
  FormMatrix<S> r(x.size(), x.dim());
  for (int a = 0; a < x.size(); ++a)
    for (int b = 0; b < x.size(); ++b) r.at(a, b) = x.at(a, b) - y.at(a, b);
  return r;
}

template <class S>
FormMatrix<S> scale(const S& s, const FormMatrix<S>& x) {
  FormMatrix<S> r(x.size(), x.dim());
  for (int a = 0; a < x.size(); ++a)
    for (int b = 0; b < x.size(); ++b) r.at(a, b) = s * x.at(a, b);
  return r;
}

// Entrywise-wedge matrix product.
template <class S>
FormMatrix<S> mat_wedge_mul(const FormMatrix<S>& x, const FormMatrix<S>& y) {
  FormMatrix<S> r(x.size(), x.dim());
  for (int a = 0; a < x.size(); ++a)
    for (int b = 0; b < x.size(); ++b) {
      Multivector<S> s(x.dim());
      for (int c = 0; c < x.size(); ++c) s = s + wedge(x.at(a, c), y.at(c, b));
      r.at(a, b) = s;
    }
  return r;
}

template <class S>
Multivector<S> mat_trace(const FormMatrix<S>& x) {
  Multivector<S> s(x.dim());
  for (int a = 0; a < x.size(); ++a) s = s + x.at(a, a);
  return s;
}

namespace detail {

// Coefficients a_m of log((z/2)/sinh(z/2)) = sum_{m>=1} a_m z^{2m}, exact.
inline std::vector<Rational> log_sinh_ratio_series(int mmax) {
  // u(w) = sinh(z/2)/(z/2) in w = z^2: u_m = 1/(4^m (2m+1)!)
  std::vector<Rational> u(mmax + 1, Rational(0));
  Rational denom(1);
  for (int m = 0; m <= mmax; ++m) {
    if (m > 0) denom = denom * Rational(4) * Rational(2 * m) * Rational(2 * m + 1);
    u[m] = Rational(1) / denom;
  }
  // a = -log u via log(1+v) = sum (-1)^{k+1} v^k / k, v = u - 1 (valuation 1)
  std::vector<Rational> v(u);
  v[0] = Rational(0);
  std::vector<Rational> a(mmax + 1, Rational(0));
  std::vector<Rational> vpow(v);
  for (int k = 1; k <= mmax; ++k) {
    Rational c = Rational((k % 2) ? 1 : -1, k);
    for (int m = 1; m <= mmax; ++m) a[m] += c * vpow[m];
    if (k < mmax) {
      std::vector<Rational> nxt(mmax + 1, Rational(0));
      for (int i = 1; i <= mmax; ++i)
        for (int j = 1; i + j <= mmax; ++j) nxt[i + j] += vpow[i] * v[j];
      vpow = std::move(nxt);
    }
  }
  for (auto& x : a) x = -x;
  return a;
}

}  // namespace detail

// det^{1/2}((X/2)/sinh(X/2)) truncated to form degree <= top_degree, via
// exp((1/2) tr log) in the commuting even subalgebra. Grade-0 part is 1 and
// only grades divisible by 4 occur.
template <class S>
Multivector<S> ahat_form(const FormMatrix<S>& X, int top_degree) {
  int n = X.size(), dim = X.dim();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (const auto& [m, v] : X.at(a, b).terms())
        if (blades::grade(m) & 1)
          throw std::invalid_argument("ahat_form: entries must be even");
  int mmax = top_degree / 4;  // tr(X^{2m}) has form degree 4m
  Multivector<S> w(dim);
  if (mmax >= 1) {
    auto coef = detail::log_sinh_ratio_series(mmax);
    FormMatrix<S> X2 = mat_wedge_mul(X, X);
    FormMatrix<S> P = X2;
    for (int m = 1; m <= mmax; ++m) {
      S am = convert_rational<S>(coef[m]);
      w = w + (sratio<S>(1, 2) * am) * mat_trace(P);
      if (m < mmax) P = mat_wedge_mul(P, X2);
    }
  }
  // exp(w): w is nilpotent (grades >= 4)
  Multivector<S> result = Multivector<S>::scalar(dim, sratio<S>(1));
  Multivector<S> term = Multivector<S>::scalar(dim, sratio<S>(1));
  for (int k = 1; k <= top_degree / 4 && !term.isZero(); ++k) {
    term = wedge(term, w);
    term = sratio<S>(1, k) * term;
    result = result + term;
  }
  // truncate above top_degree
  typename Multivector<S>::Accum acc(dim);
  for (const auto& [m, v] : result.terms())
    if (blades::grade(m) <= top_degree) acc.add(m, v);
  return acc.take();
}

}  // namespace cocycle
