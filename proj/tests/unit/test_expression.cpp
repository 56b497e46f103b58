#include <doctest.h>

#include "shj/errors.hpp"
#include "shj/expression.hpp"
#include "shj/scalar_field.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace shj;

TEST_CASE("tokenize splits numbers, names, operators") {
  const auto toks = tokenize("q1^2/2 + 1.5e-3*sin(p1)");
  REQUIRE(toks.size() == 12);
  CHECK(toks[0].kind == TokenKind::identifier);
  CHECK(toks[0].lexeme == "q1");
  CHECK(toks[4].lexeme == "2");
  CHECK(toks[6].lexeme == "1.5e-3");
  CHECK(toks[6].kind == TokenKind::number);
  CHECK(toks[8].lexeme == "sin");
  CHECK(toks[9].kind == TokenKind::paren);
}

TEST_CASE("illegal character is a lex error at its offset") {
  try {
    tokenize("q1 $ p1");
    FAIL("no throw");
  } catch (const LexError& e) {
    CHECK(e.offset == 3);
  }
}

TEST_CASE("parse errors carry offsets") {
  CHECK_THROWS_AS(parse("(q1 + p1"), ParseError);
  CHECK_THROWS_AS(parse("q1 +"), ParseError);
  CHECK_THROWS_AS(parse("tan(q1)"), ParseError);
  CHECK_THROWS_AS(parse(""), SyntaxError);
  try {
    parse("q1 * * p1");
    FAIL("no throw");
  } catch (const ParseError& e) {
    CHECK(e.offset == 5);
  }
}

TEST_CASE("precedence: power binds tighter than unary minus, right-associative") {
  const std::vector<std::string> names{"q1"};
  CHECK(evaluate(parse("-q1^2"), names, {3.0}) == doctest::Approx(-9.0));
  CHECK(evaluate(parse("2^-1"), names, {0.0}) == doctest::Approx(0.5));
  CHECK(evaluate(parse("2^3^2"), names, {0.0}) == doctest::Approx(512.0));
  CHECK(evaluate(parse("1 - 2 - 3"), names, {0.0}) == doctest::Approx(-4.0));
  CHECK(evaluate(parse("8 / 4 / 2"), names, {0.0}) == doctest::Approx(1.0));
  CHECK(evaluate(parse("1 + 2*3"), names, {0.0}) == doctest::Approx(7.0));
}

TEST_CASE("catalog expressions parse and round-trip") {
  for (const char* src : {"p1^2/2 + cos(q1)", "a1*b1", "(a1-b1)^2/(2*t)", "a1*(b1-t)", "0.5*q1^2", "0"}) {
    const Expr e = parse(src);
    CHECK(parse(print(e)) == e);
  }
}

namespace {

// Random expression trees over q1, p1, t with safe function domains.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> c(-3.0, 3.0);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", c(rng));
      return buf;
    }
    case 1: {
      const char* v[] = {"q1", "p1", "t"};
      return v[std::uniform_int_distribution<int>(0, 2)(rng)];
    }
    case 2: return "(" + random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1) + ")";
    case 3: return "(" + random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1) + ")";
    case 4: return "(" + random_expr(rng, depth - 1) + " * " + random_expr(rng, depth - 1) + ")";
    case 5: return "sin(" + random_expr(rng, depth - 1) + ")";
    case 6: return "exp(" + random_expr(rng, depth - 1) + "/4)";
    case 7: return "(" + random_expr(rng, depth - 1) + ")^2";
    default: return "-" + random_expr(rng, depth - 1);
  }
}

}  // namespace

TEST_CASE("property: print/parse round trip on random trees") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::string src = random_expr(rng, 4);
    const Expr e = parse(src);
    CHECK_MESSAGE(parse(print(e)) == e, src);
  }
}

TEST_CASE("property: compiled field matches the reference evaluator and finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto names = slot_names(1, VariableSpace::phase);
  for (int i = 0; i < 100; ++i) {
    const std::string src = random_expr(rng, 4);
    const ScalarField f = make_field(src, 1);
    const double t = u(rng);
    Eigen::Vector2d x(u(rng), u(rng));
    Eigen::VectorXd g(3);
    Eigen::MatrixXd H(3, 3);
    const double v = f.hessian(t, x, g, H);
    CHECK(v == doctest::Approx(evaluate(parse(src), names, {x(0), x(1), t})).epsilon(1e-12));
    const double h = 1e-5;
    for (int s = 0; s < 3; ++s) {
      auto shifted = [&](double d, Eigen::VectorXd& gs) {
        Eigen::Vector2d y = x;
        double ts = t;
        if (s < 2) y(s) += d; else ts += d;
        return f.gradient(ts, y, gs);
      };
      Eigen::VectorXd gp(3), gm(3);
      const double fp = shifted(h, gp), fm = shifted(-h, gm);
      const double scale = 1.0 + std::abs(v) + g.lpNorm<Eigen::Infinity>();
      CHECK_MESSAGE(std::abs((fp - fm) / (2 * h) - g(s)) <= 1e-6 * scale, src);
      const Eigen::VectorXd hfd = (gp - gm) / (2 * h);
      CHECK_MESSAGE((hfd - H.col(s)).lpNorm<Eigen::Infinity>() <= 1e-5 * (1.0 + H.lpNorm<Eigen::Infinity>()), src);
    }
    CHECK((H - H.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("closed-form derivatives") {
  const ScalarField f = make_field("p1^2/2 + cos(q1)", 1);
  Eigen::Vector2d x(0.3, -0.7);
  Eigen::VectorXd g(3);
  Eigen::MatrixXd H(3, 3);
  f.hessian(0.0, x, g, H);
  CHECK(g(0) == doctest::Approx(-std::sin(0.3)));
  CHECK(g(1) == doctest::Approx(-0.7));
  CHECK(g(2) == 0.0);
  CHECK(H(0, 0) == doctest::Approx(-std::cos(0.3)));
  CHECK(H(1, 1) == doctest::Approx(1.0));
  CHECK(H(0, 1) == 0.0);
}

TEST_CASE("binding") {
  CHECK_THROWS_AS(make_field("q2", 1), BindError);
  CHECK_THROWS_AS(make_field("x", 1), BindError);
  CHECK_THROWS_AS(make_field("a1", 1), BindError);
  CHECK_THROWS_AS(make_field("q1", 1, VariableSpace::generating), BindError);
  CHECK_NOTHROW(make_field("a1*b1 + t", 1, VariableSpace::generating));
  const ScalarField f = make_field("q1 + t", 2);
  CHECK(f.arity().uses_t);
  CHECK(f.arity().uses_first);
  CHECK_FALSE(f.arity().uses_second);
  CHECK(slot_names(2, VariableSpace::phase) == std::vector<std::string>{"q1", "q2", "p1", "p2", "t"});
}

TEST_CASE("domain errors") {
  Eigen::Vector2d x(-1.0, 0.0);
  CHECK_THROWS_AS(make_field("log(q1)", 1).value(0.0, x), EvaluationError);
  CHECK_THROWS_AS(make_field("sqrt(q1)", 1).value(0.0, x), EvaluationError);
  CHECK_THROWS_AS(make_field("1/p1", 1).value(0.0, x), EvaluationError);
  CHECK_THROWS_AS(make_field("q1^0.5", 1).value(0.0, x), EvaluationError);
  CHECK(make_field("q1^3", 1).value(0.0, x) == doctest::Approx(-1.0));
  CHECK(make_field("exp(q1)^p1", 1).value(0.0, x) == doctest::Approx(1.0));
}

TEST_CASE("zero base with constant exponent") {
  Eigen::Vector2d x(0.0, 0.0);
  Eigen::VectorXd g(3);
  Eigen::MatrixXd H(3, 3);
  make_field("q1^2", 1).hessian(0.0, x, g, H);
  CHECK(g(0) == 0.0);
  CHECK(H(0, 0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_field("q1^1.5", 1).hessian(0.0, x, g, H), EvaluationError);
}
