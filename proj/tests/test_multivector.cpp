#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cocycle/multivector.hpp"

using namespace cocycle;

using MV = Multivector<Rational>;

namespace {

MV e(int n, std::initializer_list<int> idx) {
  uint32_t m = 0;
  for (int i : idx) m |= 1u << (i - 1);
  return MV::blade_term(n, m, Rational(1));
}

MV random_mv(int n, std::mt19937_64& rng, int max_terms = 5) {
  std::uniform_int_distribution<int> mask(0, (1 << n) - 1);
  std::uniform_int_distribution<long> coef(-4, 4);
  MV::Accum acc(n);
  for (int t = 0; t < max_terms; ++t) acc.add(uint32_t(mask(rng)), Rational(coef(rng)));
  return acc.take();
}

}  // namespace

TEST_CASE("wedge basics") {
  int n = 4;
  CHECK(wedge(e(n, {1}), e(n, {1})).isZero());
  CHECK(wedge(e(n, {1}), e(n, {2})) == e(n, {1, 2}));
  // (e1 + e2) ^ e2 = e12
  CHECK(wedge(e(n, {1}) + e(n, {2}), e(n, {2})) == e(n, {1, 2}));
  CHECK(wedge(e(n, {2}), e(n, {1})) == -e(n, {1, 2}));
}

TEST_CASE("clifford relations") {
  int n = 4;
  CHECK(clifford(e(n, {1}), e(n, {1})) == MV::scalar(n, Rational(-1)));
  CHECK(clifford(e(n, {1}), e(n, {2})) == e(n, {1, 2}));
  CHECK(clifford(e(n, {1, 2}), e(n, {1, 2})) == MV::scalar(n, Rational(-1)));
}

TEST_CASE("clifford anticommutation exhaustive n<=8") {
  for (int n = 2; n <= 8; n += 2) {
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        MV lhs = clifford(e(n, {i}), e(n, {j})) + clifford(e(n, {j}), e(n, {i}));
        MV expect = MV::scalar(n, Rational(i == j ? -2 : 0));
        CHECK(lhs == expect);
      }
  }
}

TEST_CASE("clifford associativity randomized") {
  std::mt19937_64 rng(7);
  for (int n = 2; n <= 6; n += 2)
    for (int trial = 0; trial < 40; ++trial) {
      MV a = random_mv(n, rng), b = random_mv(n, rng), c = random_mv(n, rng);
      CHECK(clifford(clifford(a, b), c) == clifford(a, clifford(b, c)));
    }
}

TEST_CASE("contraction") {
  int n = 4;
  CHECK(contract(e(n, {1}), e(n, {1, 2})) == e(n, {2}));
  CHECK(contract(e(n, {2}), e(n, {1, 2})) == -e(n, {1}));
  CHECK(contract(e(n, {3}), e(n, {1, 2})).isZero());
  CHECK(contract(e(n, {1}), e(n, {1})) == MV::scalar(n, Rational(1)));
  CHECK_THROWS(contract(e(n, {1, 2}), e(n, {1})));
  // graded derivation of degree -1 on a product
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    MV a = random_mv(n, rng), b = random_mv(n, rng);
    for (int g = 0; g <= n; ++g) {
      MV ah = grade_part(a, g);
      MV lhs = contract(e(n, {1}), wedge(ah, b));
      int sgn = (g % 2) ? -1 : 1;
      MV rhs = wedge(contract(e(n, {1}), ah), b) +
               Rational(sgn) * wedge(ah, contract(e(n, {1}), b));
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("clifford acts as eps - iota") {
  std::mt19937_64 rng(11);
  int n = 6;
  for (int trial = 0; trial < 30; ++trial) {
    MV a = random_mv(n, rng);
    for (int i = 1; i <= n; ++i) {
      MV lhs = clifford(e(n, {i}), a);
      MV rhs = wedge(e(n, {i}), a) - contract(e(n, {i}), a);
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("berezin") {
  int n = 4;
  CHECK(berezin(e(n, {1, 2, 3, 4})) == Rational(1));
  CHECK(berezin(e(n, {1, 2})) == Rational(0));
  CHECK(berezin(Rational(5) * e(n, {1, 2, 3, 4}) + e(n, {1})) == Rational(5));
}

TEST_CASE("supertrace") {
  int n = 4;
  auto t = supertrace(e(n, {1, 2, 3, 4}));
  CHECK(t.re == Rational(-4));
  CHECK(t.im == Rational(0));
  auto u = supertrace(MV::scalar(n, Rational(1)));
  CHECK(u.re == Rational(0));
  CHECK(u.im == Rational(0));
  // square of a 4-form has grades 0 and 4 only: zero supertrace in n=6
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    MV a(6);
    {
      MV::Accum acc(6);
      std::uniform_int_distribution<long> coef(-3, 3);
      for (uint32_t m = 0; m < 64; ++m)
        if (blades::grade(m) == 4) acc.add(m, Rational(coef(rng)));
      a = acc.take();
    }
    auto s = supertrace(clifford(a, a));
    CHECK(s.re == Rational(0));
    CHECK(s.im == Rational(0));
  }
}

TEST_CASE("graded trace property") {
  std::mt19937_64 rng(13);
  int n = 4;
  for (int trial = 0; trial < 25; ++trial) {
    MV a = random_mv(n, rng), b = random_mv(n, rng);
    for (int ga = 0; ga <= n; ++ga)
      for (int gb = 0; gb <= n; ++gb) {
        MV ah = grade_part(a, ga), bh = grade_part(b, gb);
        auto lhs = supertrace(clifford(ah, bh));
        auto rhs = supertrace(clifford(bh, ah));
        Rational sgn((ga * gb) % 2 ? -1 : 1);
        CHECK(lhs.re == sgn * rhs.re);
        CHECK(lhs.im == sgn * rhs.im);
      }
  }
}

namespace {

// Independent oracle: det^{1/2}(u(X)) by direct minor expansion of the matrix
// series u(X) = sum_m b_m X^{2m}, then a binomial square root.
MV ahat_oracle(const FormMatrix<Rational>& X, int top_degree) {
  int n = X.size();
  // (z/2)/sinh(z/2) = 1 - z^2/24 + 7 z^4/5760 - ...
  std::vector<Rational> b = {Rational(1), Rational(-1, 24), Rational(7, 5760)};
  FormMatrix<Rational> U(n);
  for (int a = 0; a < n; ++a) U.at(a, a) = MV::scalar(n, Rational(1));
  FormMatrix<Rational> X2 = mat_wedge_mul(X, X);
  FormMatrix<Rational> P = X2;
  for (size_t m = 1; m < b.size() && int(4 * m) <= top_degree; ++m) {
    U = U + scale(b[m], P);
    P = mat_wedge_mul(P, X2);
  }
  // Leibniz determinant over the commuting even subalgebra
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  MV det(n);
  do {
    int inv = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inv;
    MV term = MV::scalar(n, Rational(inv % 2 ? -1 : 1));
    for (int i = 0; i < n; ++i) term = wedge(term, U.at(i, perm[i]));
    det = det + term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  // sqrt(1 + nilpotent)
  MV v = det - MV::scalar(n, Rational(1));
  MV r = MV::scalar(n, Rational(1));
  MV p = MV::scalar(n, Rational(1));
  Rational c(1);
  for (int k = 1; k <= n / 4 + 1; ++k) {
    c = c * (Rational(1, 2) - Rational(k - 1)) / Rational(k);
    p = wedge(p, v);
    if (p.isZero()) break;
    r = r + c * p;
  }
  typename MV::Accum acc(n);
  for (const auto& [m, val] : r.terms())
    if (blades::grade(m) <= top_degree) acc.add(m, val);
  return acc.take();
}

FormMatrix<Rational> random_form_matrix(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<long> coef(-3, 3);
  FormMatrix<Rational> X(n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      MV::Accum acc(n);
      for (uint32_t m = 0; m < (1u << n); ++m)
        if (blades::grade(m) == 2) acc.add(m, Rational(coef(rng), 2));
      MV entry = acc.take();
      X.at(a, b) = entry;
      X.at(b, a) = -entry;
    }
  return X;
}

}  // namespace

TEST_CASE("ahat_form") {
  std::mt19937_64 rng(17);
  SUBCASE("zero matrix gives 1") {
    FormMatrix<Rational> X(4);
    CHECK(ahat_form(X, 4) == MV::scalar(4, Rational(1)));
  }
  SUBCASE("grade 4 part is -(1/48) tr(X^2), grade 2 part vanishes") {
    for (int trial = 0; trial < 10; ++trial) {
      auto X = random_form_matrix(4, rng);
      MV a = ahat_form(X, 4);
      CHECK(grade_part(a, 2).isZero());
      MV expect = Rational(-1, 48) * mat_trace(mat_wedge_mul(X, X));
      CHECK(grade_part(a, 4) == expect);
    }
  }
  SUBCASE("matches minor-expansion oracle in n=4 and n=6") {
    for (int n : {4, 6})
      for (int trial = 0; trial < 6; ++trial) {
        auto X = random_form_matrix(n, rng);
        CHECK(ahat_form(X, n) == ahat_oracle(X, n));
      }
  }
  SUBCASE("odd-grade entries rejected") {
    FormMatrix<Rational> X(4);
    X.at(0, 1) = e(4, {1});
    X.at(1, 0) = -e(4, {1});
    CHECK_THROWS(ahat_form(X, 4));
  }
}
