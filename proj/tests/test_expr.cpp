#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cocycle/expr.hpp"

using namespace cocycle;
using namespace cocycle::exprs;

TEST_CASE("parse structure and precedence") {
  auto e = parse("sin(x1)*x2^2", 4);
  CHECK(e->kind == Expr::Kind::Mul);
  CHECK(e->a->kind == Expr::Kind::Sin);
  CHECK(e->b->kind == Expr::Kind::Pow);
  CHECK(e->b->ipow == 2);

  // ^ binds tighter than unary minus, which binds tighter than *
  auto f = parse("-x1^2", 2);
  CHECK(f->kind == Expr::Kind::Neg);
  CHECK(f->a->kind == Expr::Kind::Pow);

  auto g = parse("1-2-3", 2);  // left associative
  CHECK(g->kind == Expr::Kind::Sub);
  CHECK(g->a->kind == Expr::Kind::Sub);

  // 1/0 parses (evaluation errors later)
  auto h = parse("1/0", 2);
  CHECK(h->kind == Expr::Kind::Div);
  CHECK_THROWS(evaluate(h, {0.0, 0.0}));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse("x9", 4), ParseError);
  CHECK_THROWS_AS(parse("foo(x1)", 4), ParseError);
  CHECK_THROWS_AS(parse("sin x1", 4), ParseError);
  CHECK_THROWS_AS(parse("1+", 4), ParseError);
  CHECK_THROWS_AS(parse("(x1", 4), ParseError);
  try {
    parse("x1 + @", 4);
    CHECK(false);
  } catch (const ParseError& pe) {
    CHECK(pe.offset == 5);
  }
}

TEST_CASE("differentiate") {
  auto d1 = differentiate(parse("sin(x1)", 2), 0);
  CHECK(print(d1) == print(parse("cos(x1)", 2)));
  auto d2 = differentiate(parse("x1", 2), 1);
  CHECK(d2->kind == Expr::Kind::Number);
  CHECK(d2->number == Rational(0));
  auto d3 = differentiate(parse("x1^3", 2), 0);
  // 3*x1^2
  std::vector<double> p{2.0, 0.0};
  CHECK(evaluate(d3, p) == doctest::Approx(12.0));
}

TEST_CASE("round trip parse.print") {
  std::vector<std::string> corpus = {
      "sin(x1)*x2^2", "1/2*x1+3.25", "-x1^2+sqrt(exp(x2))", "x1*x2*x3-x4^3",
      "(x1+x2)^4/7", "cos(x1)*cos(x2)-sin(x1)*sin(x2)", "2/3", "-0.125*x1"};
  for (const auto& src : corpus) {
    auto e = parse(src, 4);
    auto e2 = parse(print(e), 4);
    CHECK(equal(e, e2));
  }
}

TEST_CASE("taylor jets") {
  const auto& t = MonomialTable::get(2, 3);
  SUBCASE("exp at 0") {
    auto j = taylor_jet<double>(parse("exp(x1)", 2), {0.0, 0.0}, t);
    CHECK(j[0] == doctest::Approx(1.0));
    Jet<double> x = Jet<double>::variable(t, 0);
    CHECK(j[t.upRank(0, 0)] == doctest::Approx(1.0));
    CHECK(j[t.mulRank(t.upRank(0, 0), t.upRank(0, 0))] == doctest::Approx(0.5));
  }
  SUBCASE("shifted product") {
    auto j = taylor_jet<Rational>(parse("x1*x2", 2), {Rational(1), Rational(1)}, t);
    CHECK(j[0] == Rational(1));
    CHECK(j[t.upRank(0, 0)] == Rational(1));
    CHECK(j[t.upRank(0, 1)] == Rational(1));
    CHECK(j[t.mulRank(t.upRank(0, 0), t.upRank(0, 1))] == Rational(1));
  }
  SUBCASE("geometric series") {
    auto j = taylor_jet<double>(parse("1/(1-x1)", 2), {0.0, 0.0}, t);
    int x1 = t.upRank(0, 0);
    int x2 = t.upRank(x1, 0);
    int x3 = t.upRank(x2, 0);
    CHECK(j[0] == doctest::Approx(1.0));
    CHECK(j[x1] == doctest::Approx(1.0));
    CHECK(j[x2] == doctest::Approx(1.0));
    CHECK(j[x3] == doctest::Approx(1.0));
  }
  SUBCASE("rational mode rejects transcendental and non-constant division") {
    CHECK_THROWS(taylor_jet<Rational>(parse("sin(x1)", 2), {Rational(0), Rational(0)}, t));
    CHECK_THROWS(taylor_jet<Rational>(parse("1/(1-x1)", 2), {Rational(0), Rational(0)}, t));
    auto ok = taylor_jet<Rational>(parse("x1/2", 2), {Rational(0), Rational(0)}, t);
    CHECK(ok[t.upRank(0, 0)] == Rational(1, 2));
  }
  SUBCASE("singular evaluation") {
    CHECK_THROWS(taylor_jet<double>(parse("1/x1", 2), {0.0, 0.0}, t));
    CHECK_THROWS(taylor_jet<double>(parse("sqrt(x1)", 2), {-1.0, 0.0}, t));
  }
}

TEST_CASE("taylor commutes with differentiate") {
  const auto& t = MonomialTable::get(3, 5);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pt(-0.7, 0.7);
  std::vector<std::string> corpus = {"sin(x1*x2)+exp(x3/4)", "x1^3*x2-cos(x3)",
                                     "sqrt(4+x1^2+x2^2)", "x1*x2*x3+sin(x2)*cos(x1)"};
  for (const auto& src : corpus) {
    auto e = parse(src, 3);
    std::vector<double> p{pt(rng), pt(rng), pt(rng)};
    for (int v = 0; v < 3; ++v) {
      auto lhs = taylor_jet<double>(differentiate(e, v), p, t);
      auto rhs = jets::derivative(taylor_jet<double>(e, p, t), v);
      for (int i = 0; i < t.degreeEnd(4); ++i)
        CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-10));
    }
  }
}
