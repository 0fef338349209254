#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cocycle/multivector.hpp"
#include "cocycle/scalar.hpp"

namespace cocycle {

// Sentinel order for jets that are exact polynomials (no truncation error).
inline constexpr int kExactOrder = 1 << 20;

// Enumeration of multi-indices |alpha| <= K in n variables, graded then
// lexicographic, with product/derivative rank lookups. Shared, immutable.
class MonomialTable {
 public:
  MonomialTable(int n, int K) : n_(n), K_(K) {
    std::array<uint8_t, 8> cur{};
    deg_begin_.assign(K + 2, 0);
    for (int d = 0; d <= K; ++d) {
      deg_begin_[d] = static_cast<int>(exps_.size());
      gen(cur, 0, d, d);
    }
    deg_begin_[K + 1] = static_cast<int>(exps_.size());
    rank_of_key_.reserve(exps_.size() * 2);
    for (size_t i = 0; i < exps_.size(); ++i) rank_of_key_[key(exps_[i])] = int(i);
    up_.assign(exps_.size() * n, -1);
    down_.assign(exps_.size() * n, -1);
    for (size_t i = 0; i < exps_.size(); ++i)
      for (int v = 0; v < n; ++v) {
        auto e = exps_[i];
        if (degree(int(i)) + 1 <= K) {
          e[v]++;
          up_[i * n + v] = rank_of_key_.at(key(e));
          e[v]--;
        }
        if (e[v] > 0) {
          e[v]--;
          down_[i * n + v] = rank_of_key_.at(key(e));
        }
      }
    if (size_t(size()) * size() <= (1u << 22)) {
      pair_.assign(size_t(size()) * size(), -1);
      for (int i = 0; i < size(); ++i)
        for (int j = 0; j < size(); ++j)
          if (degree(i) + degree(j) <= K)
            pair_[size_t(i) * size() + j] = rank_of_key_.at(key_sum(i, j));
    }
  }

  int vars() const { return n_; }
  int maxOrder() const { return K_; }
  int size() const { return static_cast<int>(exps_.size()); }
  int degree(int rank) const {
    return int(std::upper_bound(deg_begin_.begin(), deg_begin_.begin() + K_ + 2,
                                rank) -
               deg_begin_.begin()) -
           1;
  }
  int degreeBegin(int d) const { return deg_begin_[d]; }
  int degreeEnd(int d) const { return deg_begin_[d + 1]; }
  const std::array<uint8_t, 8>& exponents(int rank) const { return exps_[rank]; }
  int exponent(int rank, int v) const { return exps_[rank][v]; }

  // rank of alpha_i + alpha_j, or -1 when the sum exceeds K
  int mulRank(int i, int j) const {
    if (!pair_.empty()) return pair_[size_t(i) * size() + j];
    if (degree(i) + degree(j) > K_) return -1;
    return rank_of_key_.at(key_sum(i, j));
  }
  int upRank(int rank, int v) const { return up_[size_t(rank) * n_ + v]; }
  int downRank(int rank, int v) const { return down_[size_t(rank) * n_ + v]; }

  static const MonomialTable& get(int n, int K);

 private:
  void gen(std::array<uint8_t, 8>& cur, int v, int rem, int d) {
    if (v == n_ - 1) {
      cur[v] = uint8_t(rem);
      exps_.push_back(cur);
      cur[v] = 0;
      return;
    }
    for (int e = rem; e >= 0; --e) {
      cur[v] = uint8_t(e);
      gen(cur, v + 1, rem - e, d);
    }
    cur[v] = 0;
  }
  static uint64_t key(const std::array<uint8_t, 8>& e) {
    uint64_t k = 0;
    for (int v = 0; v < 8; ++v) k |= uint64_t(e[v]) << (8 * v);
    return k;
  }
  uint64_t key_sum(int i, int j) const { return key(exps_[i]) + key(exps_[j]); }

  int n_, K_;
  std::vector<std::array<uint8_t, 8>> exps_;
  std::vector<int> deg_begin_;
  std::unordered_map<uint64_t, int> rank_of_key_;
  std::vector<int32_t> up_, down_, pair_;
};

inline const MonomialTable& MonomialTable::get(int n, int K) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MonomialTable>> reg;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = reg[{n, K}];
  if (!slot) slot = std::make_unique<MonomialTable>(n, K);
  return *slot;
}

// Truncated Taylor polynomial at a basepoint. `order` is the trust radius:
// coefficients with |alpha| <= min(order, K) are meaningful; kExactOrder
// marks exact polynomials.
template <class S>
class Jet {
 public:
  Jet() : tab_(nullptr), order_(0) {}
  Jet(const MonomialTable& tab, int order)
      : tab_(&tab), order_(order), c_(tab.size(), S{}) {}

  static Jet constant(const MonomialTable& tab, S v) {
    Jet j(tab, kExactOrder);
    j.c_[0] = std::move(v);
    return j;
  }
  static Jet variable(const MonomialTable& tab, int v) {
    Jet j(tab, kExactOrder);
    j.c_[tab.upRank(0, v)] = sratio<S>(1);
    return j;
  }

  const MonomialTable& table() const { return *tab_; }
  bool valid() const { return tab_ != nullptr; }
  int order() const { return order_; }
  void setOrder(int o) { order_ = o; }
  // highest degree with coefficients stored (clamped trust radius)
  int effOrder() const { return std::min(order_, tab_->maxOrder()); }

  const S& operator[](int rank) const { return c_[rank]; }
  S& operator[](int rank) { return c_[rank]; }

  int topDegree() const {
    for (int i = tab_->size() - 1; i > 0; --i)
      if (!is_zero(c_[i])) return tab_->degree(i);
    return 0;
  }
  bool isZero() const {
    for (const auto& v : c_)
      if (!is_zero(v)) return false;
    return true;
  }

 private:
  const MonomialTable* tab_;
  int order_;
  std::vector<S> c_;
};

namespace jets {

template <class S>
int join_order(const Jet<S>& a, const Jet<S>& b) {
  return std::min(a.order(), b.order());
}

template <class S>
Jet<S> add(const Jet<S>& a, const Jet<S>& b) {
  Jet<S> r(a.table(), join_order(a, b));
  int lim = a.table().degreeEnd(std::min(r.effOrder(), a.table().maxOrder()));
  for (int i = 0; i < lim; ++i) r[i] = a[i] + b[i];
  return r;
}

template <class S>
Jet<S> sub(const Jet<S>& a, const Jet<S>& b) {
  Jet<S> r(a.table(), join_order(a, b));
  int lim = a.table().degreeEnd(std::min(r.effOrder(), a.table().maxOrder()));
  for (int i = 0; i < lim; ++i) r[i] = a[i] - b[i];
  return r;
}

template <class S>
Jet<S> neg(const Jet<S>& a) {
  Jet<S> r(a.table(), a.order());
  for (int i = 0; i < a.table().size(); ++i) r[i] = -a[i];
  return r;
}

template <class S>
Jet<S> scale(const S& s, const Jet<S>& a) {
  Jet<S> r(a.table(), a.order());
  for (int i = 0; i < a.table().size(); ++i) r[i] = s * a[i];
  return r;
}

// Truncated product at order min of the operands (exactness tracked).
template <class S>
Jet<S> mul(const Jet<S>& a, const Jet<S>& b) {
  const MonomialTable& t = a.table();
  int order = join_order(a, b);
  if (order == kExactOrder && a.topDegree() + b.topDegree() > t.maxOrder())
    order = t.maxOrder();
  Jet<S> r(t, order);
  int cut = std::min(order, t.maxOrder());
  int alim = t.degreeEnd(std::min(cut, t.maxOrder()));
  for (int i = 0; i < alim; ++i) {
    if (is_zero(a[i])) continue;
    int da = t.degree(i);
    int blim = t.degreeEnd(std::min(cut - da, t.maxOrder()));
    for (int j = 0; j < blim; ++j) {
      if (is_zero(b[j])) continue;
      r[t.mulRank(i, j)] += a[i] * b[j];
    }
  }
  return r;
}

template <class S>
Jet<S> derivative(const Jet<S>& a, int v) {
  const MonomialTable& t = a.table();
  int order = a.order() == kExactOrder ? kExactOrder : a.order() - 1;
  Jet<S> r(t, order);
  for (int i = 0; i < t.size(); ++i) {
    int d = t.downRank(i, v);
    if (d >= 0 && !is_zero(a[i])) r[d] += sratio<S>(t.exponent(i, v)) * a[i];
  }
  return r;
}

template <class S>
Jet<S> mul_by_variable(const Jet<S>& a, int v) {
  const MonomialTable& t = a.table();
  int order =
      a.order() == kExactOrder
          ? (a.topDegree() + 1 <= t.maxOrder() ? kExactOrder : t.maxOrder())
          : std::min(a.order() + 1, t.maxOrder());
  Jet<S> r(t, order);
  for (int i = 0; i < t.size(); ++i) {
    int u = t.upRank(i, v);
    if (u >= 0 && !is_zero(a[i])) r[u] += a[i];
  }
  return r;
}

// f |-> int_0^1 t^{j-1} f(t x) dt: monomial x^alpha scaled by 1/(j+|alpha|).
template <class S>
Jet<S> radial_integral(int j, const Jet<S>& f) {
  if (j <= 0) throw std::invalid_argument("radial_integral: j must be >= 1");
  const MonomialTable& t = f.table();
  Jet<S> r(t, f.order());
  for (int i = 0; i < t.size(); ++i)
    if (!is_zero(f[i])) r[i] = sratio<S>(1, j + t.degree(i)) * f[i];
  return r;
}

// Euler operator sum_a x_a d_a: monomial x^alpha scaled by |alpha|.
template <class S>
Jet<S> euler_apply(const Jet<S>& f) {
  const MonomialTable& t = f.table();
  Jet<S> r(t, f.order());
  for (int i = 0; i < t.size(); ++i)
    if (!is_zero(f[i])) r[i] = sratio<S>(t.degree(i)) * f[i];
  return r;
}

template <class S>
S eval_at_origin(const Jet<S>& f) {
  return f[0];
}

// f^r for rational exponent via the binomial series, f = c0 (1 + u).
// Exact mode requires c0 == 1; float mode allows any positive c0.
template <class S>
Jet<S> exp_log_pow(const Jet<S>& f, const Rational& r) {
  const MonomialTable& t = f.table();
  S c0 = f[0];
  S lead;
  if constexpr (ScalarOps<S>::exact) {
    if (!(c0 == sratio<S>(1)))
      throw std::domain_error("exp_log_pow: constant term must be 1 in exact mode");
    lead = sratio<S>(1);
  } else {
    if (!(c0 > 0)) throw std::domain_error("exp_log_pow: constant term must be positive");
    lead = std::pow(c0, r.toDouble());
  }
  Jet<S> u = f;
  u[0] = S{};
  if constexpr (!ScalarOps<S>::exact) {
    S inv = sratio<S>(1) / c0;
    u = scale(inv, u);
  }
  int cut = std::min(f.effOrder(), t.maxOrder());
  Jet<S> result = Jet<S>::constant(t, sratio<S>(1));
  result.setOrder(f.order());
  Jet<S> upow = Jet<S>::constant(t, sratio<S>(1));
  upow.setOrder(f.order());
  Rational binom(1);
  for (int k = 1; k <= cut; ++k) {
    binom = binom * (r - Rational(k - 1)) / Rational(k);
    upow = mul(upow, u);
    if (upow.isZero()) break;
    result = add(result, scale(convert_rational<S>(binom), upow));
  }
  return scale(lead, result);
}

template <class S>
Jet<S> inverse(const Jet<S>& f) {
  if constexpr (ScalarOps<S>::exact) {
    // general nonzero constant term: f = c0 (1 + u), 1/f = (1/c0) sum (-u)^k
    S c0 = f[0];
    if (is_zero(c0)) throw std::domain_error("inverse: zero constant term");
    Jet<S> g = scale(sratio<S>(1) / c0, f);
    Jet<S> u = g;
    u[0] = S{};
    int cut = std::min(f.effOrder(), f.table().maxOrder());
    Jet<S> result = Jet<S>::constant(f.table(), sratio<S>(1));
    result.setOrder(f.order());
    Jet<S> p = Jet<S>::constant(f.table(), sratio<S>(1));
    p.setOrder(f.order());
    for (int k = 1; k <= cut; ++k) {
      p = mul(p, u);
      if (p.isZero()) break;
      result = (k % 2) ? sub(result, p) : add(result, p);
    }
    return scale(sratio<S>(1) / c0, result);
  } else {
    return exp_log_pow(f, Rational(-1));
  }
}

template <class S>
bool equal_to_order(const Jet<S>& a, const Jet<S>& b, int o) {
  const MonomialTable& t = a.table();
  int lim = t.degreeEnd(std::min(o, t.maxOrder()));
  for (int i = 0; i < lim; ++i)
    if (!(a[i] == b[i])) return false;
  return true;
}

}  // namespace jets

// Substitution of jets into a jet; the power cache is shared across many
// outer jets with the same arguments.
template <class S>
class CompositionPlan {
 public:
  CompositionPlan(const MonomialTable& outer, std::vector<Jet<S>> args)
      : outer_(&outer), args_(std::move(args)), pow_(outer.size()) {
    if (int(args_.size()) != outer.vars())
      throw std::invalid_argument("composition arity mismatch");
  }

  const Jet<S>& monomial(int rank) {
    if (!pow_[rank].has_value()) {
      if (rank == 0) {
        pow_[0] = Jet<S>::constant(args_[0].table(), sratio<S>(1));
      } else {
        int v = 0;
        while (outer_->exponent(rank, v) == 0) ++v;
        pow_[rank] = jets::mul(monomial(outer_->downRank(rank, v)), args_[v]);
      }
    }
    return *pow_[rank];
  }

  Jet<S> compose(const Jet<S>& f) {
    int order = f.order();
    for (const auto& a : args_) order = std::min(order, a.order());
    Jet<S> r(args_[0].table(), order);
    int lim = outer_->degreeEnd(std::min(f.effOrder(), outer_->maxOrder()));
    for (int i = 0; i < lim; ++i) {
      if (is_zero(f[i])) continue;
      const Jet<S>& m = monomial(i);
      for (int j = 0; j < m.table().size(); ++j)
        if (!is_zero(m[j])) r[j] += f[i] * m[j];
    }
    return r;
  }

 private:
  const MonomialTable* outer_;
  std::vector<Jet<S>> args_;
  std::vector<std::optional<Jet<S>>> pow_;
};

// Jet with multivector coefficients: sparse in blades, each blade holding a
// scalar jet. Blade space dimension equals the variable count.
template <class S>
class MvJet {
 public:
  MvJet() = default;
  explicit MvJet(const MonomialTable& tab) : tab_(&tab) {}

  static MvJet fromScalarJet(const Jet<S>& j) {
    MvJet m(j.table());
    if (!j.isZero()) m.c_.emplace_back(0u, j);
    return m;
  }
  static MvJet fromMultivector(const MonomialTable& tab, const Multivector<S>& v) {
    MvJet m(tab);
    for (const auto& [mask, s] : v.terms())
      m.c_.emplace_back(mask, Jet<S>::constant(tab, s));
    return m;
  }

  const MonomialTable& table() const { return *tab_; }
  bool valid() const { return tab_ != nullptr; }
  bool isZero() const { return c_.empty(); }
  const std::vector<std::pair<uint32_t, Jet<S>>>& terms() const { return c_; }

  const Jet<S>* component(uint32_t blade) const {
    for (const auto& [b, j] : c_)
      if (b == blade) return &j;
    return nullptr;
  }

  int minOrder() const {
    int o = kExactOrder;
    for (const auto& [b, j] : c_) o = std::min(o, j.order());
    return o;
  }

  void insert(uint32_t blade, Jet<S> j) {
    if (j.isZero()) {
      // still record order degradation of structurally-present components
      if (j.order() >= std::min(kExactOrder, j.table().maxOrder())) return;
    }
    auto it = std::lower_bound(
        c_.begin(), c_.end(), blade,
        [](const auto& p, uint32_t b) { return p.first < b; });
    if (it != c_.end() && it->first == blade)
      it->second = jets::add(it->second, j);
    else
      c_.insert(it, {blade, std::move(j)});
  }

  Multivector<S> evalAtOrigin() const {
    Multivector<S> m(tab_->vars());
    typename Multivector<S>::Accum acc(tab_->vars());
    for (const auto& [b, j] : c_) acc.add(b, j[0]);
    return acc.take();
  }

 private:
  const MonomialTable* tab_ = nullptr;
  std::vector<std::pair<uint32_t, Jet<S>>> c_;
};

enum class ProductMode { Clifford, Wedge };

namespace jets {

template <class S>
MvJet<S> add(const MvJet<S>& a, const MvJet<S>& b) {
  MvJet<S> r = a;
  for (const auto& [blade, j] : b.terms()) r.insert(blade, j);
  return r;
}

template <class S>
MvJet<S> neg(const MvJet<S>& a) {
  MvJet<S> r(a.table());
  for (const auto& [blade, j] : a.terms()) r.insert(blade, jets::neg(j));
  return r;
}

template <class S>
MvJet<S> sub(const MvJet<S>& a, const MvJet<S>& b) {
  return add(a, neg(b));
}

template <class S>
MvJet<S> scale(const S& s, const MvJet<S>& a) {
  MvJet<S> r(a.table());
  for (const auto& [blade, j] : a.terms()) r.insert(blade, jets::scale(s, j));
  return r;
}

template <class S>
MvJet<S> scale_jet(const Jet<S>& s, const MvJet<S>& a) {
  MvJet<S> r(a.table());
  for (const auto& [blade, j] : a.terms()) r.insert(blade, jets::mul(s, j));
  return r;
}

template <class S>
MvJet<S> mul(const MvJet<S>& a, const MvJet<S>& b, ProductMode mode) {
  MvJet<S> r(a.table());
  for (const auto& [ma, ja] : a.terms())
    for (const auto& [mb, jb] : b.terms()) {
      int sign;
      uint32_t blade;
      if (mode == ProductMode::Clifford) {
        sign = blades::clifford_sign(ma, mb);
        blade = ma ^ mb;
      } else {
        if (ma & mb) continue;
        sign = blades::reorder_sign(ma, mb);
        blade = ma | mb;
      }
      Jet<S> p = jets::mul(ja, jb);
      if (sign < 0) p = jets::neg(p);
      r.insert(blade, std::move(p));
    }
  return r;
}

template <class S>
MvJet<S> derivative(const MvJet<S>& a, int v) {
  MvJet<S> r(a.table());
  for (const auto& [blade, j] : a.terms()) r.insert(blade, jets::derivative(j, v));
  return r;
}

template <class S>
MvJet<S> radial_integral(int k, const MvJet<S>& a) {
  MvJet<S> r(a.table());
  for (const auto& [blade, j] : a.terms()) r.insert(blade, jets::radial_integral(k, j));
  return r;
}

template <class S>
MvJet<S> grade_part(const MvJet<S>& a, int g) {
  MvJet<S> r(a.table());
  for (const auto& [blade, j] : a.terms())
    if (blades::grade(blade) == g) r.insert(blade, j);
  return r;
}

template <class S>
int min_order(const MvJet<S>& a) {
  return a.minOrder();
}

}  // namespace jets

}  // namespace cocycle
