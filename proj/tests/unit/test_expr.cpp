#include <doctest.h>

#include <cmath>

#include "phg/errors.hpp"
#include "phg/expr.hpp"

using namespace phg;

namespace {
double at(const Expr& e, std::vector<double> p) { return Evaluator(e)(p); }
}  // namespace

TEST_CASE("canonical sums cancel exactly") {
  Expr a = variable(0), b = variable(1);
  CHECK(is_zero((a + b) - b - a));
  CHECK(structurally_equal(a * b + b * a, 2.0 * (a * b)));
  CHECK(structurally_equal(pow_int(a * b, 2), pow_int(a, 2) * pow_int(b, 2)));
  CHECK(is_zero(a * pow_int(a, -1) - 1.0));
  double v;
  CHECK(is_constant(constant(2.0) * constant(3.0) + 1.0, &v));
  CHECK(v == 7.0);
}

TEST_CASE("constant times sum distributes") {
  Expr a = variable(0), b = variable(1);
  Expr e = 3.0 * (a + b) - 3.0 * a;
  CHECK(structurally_equal(e, 3.0 * b));
}

TEST_CASE("derivatives of primitives") {
  Expr x = variable(0);
  CHECK(at(differentiate(pow_int(x, 2), 0), {3.0}) == doctest::Approx(6.0));
  // g'(1) = e^{-1}
  CHECK(at(differentiate(glue(x), 0), {1.0}) == doctest::Approx(std::exp(-1.0)));
  CHECK(at(differentiate(glue(x), 0), {-1.0}) == 0.0);
  CHECK(at(glue(x), {-1.0}) == 0.0);
  CHECK(at(differentiate(exp_of(2.0 * x), 0), {0.5}) == doctest::Approx(2.0 * std::exp(1.0)));
  CHECK(at(differentiate(pow_real(x, 0.5), 0), {4.0}) == doctest::Approx(0.25));
  CHECK(at(differentiate(abs_of(x), 0), {-2.0}) == doctest::Approx(-1.0));
}

TEST_CASE("glue is flat at zero") {
  Expr x = variable(0);
  Expr d = glue(x);
  for (int k = 0; k < 4; ++k) d = differentiate(d, 0);
  CHECK(at(d, {0.0}) == 0.0);
  CHECK(std::abs(at(d, {1e-3})) < 1e-100);
}

TEST_CASE("evaluation domain errors") {
  Expr x = variable(0);
  CHECK_THROWS_AS(at(pow_int(x, -1), {0.0}), DomainError);
  CHECK_THROWS_AS(at(pow_real(x, 0.5), {-1.0}), DomainError);
  CHECK_THROWS_AS(pow_int(constant(0.0), -1), DomainError);
}

TEST_CASE("guard short-circuits its body") {
  Expr x = variable(0);
  Expr g = glue(x);
  Expr e = guarded_product(g, pow_int(x, -3));
  CHECK(at(e, {-1.0}) == 0.0);
  CHECK(at(e, {0.0}) == 0.0);
  CHECK(at(e, {2.0}) == doctest::Approx(std::exp(-0.5) / 8.0));
}

TEST_CASE("exact t division") {
  const int t = 1;
  Expr xi = variable(0), tv = variable(t);
  CHECK(structurally_equal(divide_by_t_power(tv * xi, 1, t, 1e-3), xi));
  CHECK(structurally_equal(divide_by_t_power(pow_int(tv, 2), 1, t, 1e-3), tv));
  CHECK(structurally_equal(divide_by_t_power(pow_int(tv, 2) + tv * xi, 1, t, 1e-3), tv + xi));
  CHECK_THROWS_AS(divide_by_t_power(xi, 1, t, 1e-3), NotInI0Error);
}

TEST_CASE("DivT node matches the quotient on both sides of the switch") {
  const int t = 1;
  Expr xi = variable(0), tv = variable(t);
  Expr f = exp_of(tv * xi) - 1.0;  // vanishes at t = 0
  Expr q = divide_by_t_power(f, 1, t, 1e-3);
  CHECK(q->op() == Op::DivT);
  for (double tt : {0.0, 1e-5, -4e-4, 2e-3, 0.7}) {
    double expect = tt == 0.0 ? 1.5 : (std::exp(1.5 * tt) - 1.0) / tt;
    CHECK(at(q, {1.5, tt}) == doctest::Approx(expect).epsilon(1e-11));
  }
  // d/dt of (e^{t xi} - 1)/t at t = 0 is xi^2 / 2
  CHECK(at(differentiate(q, t), {1.5, 0.0}) == doctest::Approx(1.125).epsilon(1e-12));
  Expr q2 = divide_by_t_power(f - tv * xi, 2, t, 1e-3);
  CHECK(at(q2, {2.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(at(q2, {2.0, 0.5}) == doctest::Approx((std::exp(1.0) - 1.0 - 1.0) / 0.25).epsilon(1e-12));
}

TEST_CASE("substitution through DivT") {
  const int t = 1;
  Expr xi = variable(0), tv = variable(t);
  Expr q = divide_by_t_power(exp_of(tv * xi) - 1.0, 1, t, 1e-3);
  Expr q0 = substitute(q, {{t, constant(0.0)}});
  CHECK(at(q0, {1.5}) == doctest::Approx(1.5));
  Expr q1 = substitute(q, {{t, constant(1.0)}});
  CHECK(at(q1, {1.5}) == doctest::Approx(std::exp(1.5) - 1.0));
  Expr qs = substitute(q, {{t, 2.0 * tv}, {0, 3.0 * xi}});
  CHECK(at(qs, {0.5, 0.25}) == doctest::Approx((std::exp(0.75) - 1.0) / 0.5));
  CHECK(at(qs, {0.5, 0.0}) == doctest::Approx(1.5));
  CHECK_THROWS_AS(substitute(q, {{t, pow_int(tv, 2)}}), UnsupportedError);
}

TEST_CASE("printing is deterministic") {
  Expr a = variable(0), b = variable(1);
  CHECK(to_string(a + b) == to_string(b + a));
  CHECK(to_string(pow_int(a, 3)) == "(^ v0 3)");
}
