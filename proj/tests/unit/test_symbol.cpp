#include <doctest.h>

#include <cmath>
#include <random>

#include "phg/checks.hpp"
#include "phg/cutoffs.hpp"
#include "phg/dsl.hpp"
#include "phg/errors.hpp"

using namespace phg;

namespace {

SymbolExpr sym(const std::string& src, Signature sig, Weights w) { return parse_symbol(src, {sig, w}); }

// Two Richardson steps on h, h/2, h/4 cancel the h^2 and h^4 error terms.
double richardson(const SymbolExpr& e, const MultiIndex& mi, std::span<const double> p, double h) {
  double d1 = fd_derivative(e, mi, p, h), d2 = fd_derivative(e, mi, p, h / 2), d3 = fd_derivative(e, mi, p, h / 4);
  double r1 = (4 * d2 - d1) / 3, r2 = (4 * d3 - d2) / 3;
  return (16 * r2 - r1) / 15;
}

const Signature kXi1{0, 1, false};
const Signature kXi2{0, 2, false};
const Signature kXi2T{0, 2, true};

}  // namespace

TEST_CASE("evaluate examples") {
  CHECK(evaluate(sym("(^ xi1 2)", kXi1, Weights({1})), {{3.0}})[0] == 9.0);
  CHECK(evaluate(sym("(glue xi1)", kXi1, Weights({1})), {{-1.0}})[0] == 0.0);
  auto g = sym("(exp (- (^ (qnorm) 2)))", kXi2, Weights({1, 1}));
  CHECK(evaluate(g, {{1.0, 1.0}})[0] == doctest::Approx(std::exp(-2.0)));
  CHECK_THROWS_AS(evaluate(g, {{1.0}}), InvalidParameter);
  CHECK_THROWS_AS(evaluate(sym("(pow xi1 0.5)", kXi1, Weights({1})), {{-1.0}}), DomainError);
}

TEST_CASE("differentiate examples") {
  Weights w({1});
  auto a = sym("(^ xi1 2)", kXi1, w);
  auto d = differentiate(a, MultiIndex{{1}});
  CHECK(structurally_equal(d.expr, 2.0 * xi_var(kXi1, 0)));
  Signature st{0, 1, true};
  auto f = sym("(* t (exp xi1))", st, w);
  auto ft = differentiate(f, MultiIndex{{0, 1}});
  CHECK(structurally_equal(ft.expr, exp_of(xi_var(st, 0))));
  auto gl = differentiate(sym("(glue xi1)", kXi1, w), MultiIndex{{1}});
  CHECK(evaluate(gl, {{1.0}})[0] == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("fd_derivative oracle") {
  Weights w({1});
  auto a = sym("(^ xi1 2)", kXi1, w);
  std::vector<double> p{0.7};
  CHECK(std::abs(fd_derivative(a, MultiIndex{{1}}, p, 1e-4) - 1.4) < 1e-8);
  CHECK(fd_derivative(sym("0", kXi1, w), MultiIndex{{2}}, p, 1e-4) == 0.0);
  CHECK(std::abs(fd_derivative(sym("(+ 1 (* 3 xi1))", kXi1, w), MultiIndex{{2}}, p, 1e-3)) < 1e-8);
  CHECK_THROWS_AS(fd_derivative(a, MultiIndex{{1}}, p, 0.0), InvalidParameter);
}

TEST_CASE("symbolic derivatives agree with finite differences up to order 3") {
  Weights w({2, 1});
  const Signature sig{1, 2, true};
  const char* corpus[] = {
      "(* (exp (* x1 xi2)) (^ xi1 2))",
      "(cut (phi) (* (^ (qnorm) 3) (+ 1 (^ x1 2))))",
      "(+ (^ t 4) (* t xi1) (^ xi2 4))",
      "(* (chi0 t) (exp (- (^ xi2 2))))",
      "(/ 1 (+ 2 (^ xi1 2) (^ t 2)))",
  };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 1.4);
  for (const char* src : corpus) {
    auto e = sym(src, sig, w);
    for (const auto& mi : multi_indices(sig.arity(), {0, 1, 2, 3}, 3)) {
      std::vector<double> p{u(rng) - 0.8, u(rng), u(rng), u(rng)};
      double exact = evaluate(differentiate(e, mi), {p})[0];
      // Third differences at h = 1e-4 lose ~1e-4 to roundoff, so order 3
      // uses a Richardson-extrapolated pair at a coarser step.
      double fd = mi.total() < 3 ? fd_derivative(e, mi, p, 1e-4) : richardson(e, mi, p, 2e-2);
      CHECK_MESSAGE(std::abs(exact - fd) <= 1e-6 * std::max(1.0, std::abs(exact)), src, " ", mi.str());
    }
  }
}

TEST_CASE("homogeneous degree inference") {
  Weights w({2, 1});
  const Signature sig{0, 2, true};
  auto vw = variable_weights(sig, w);
  CHECK(homogeneous_degree(sym("(+ xi1 (^ xi2 2) (* t xi2))", sig, w).expr, vw) == 2.0);
  CHECK(!homogeneous_degree(sym("(+ xi1 xi2)", sig, w).expr, vw));
  CHECK(homogeneous_degree(sym("(qnorm)", sig, w).expr, vw) == doctest::Approx(1.0));
  CHECK(!homogeneous_degree(sym("(phi)", sig, w).expr, vw));
}

TEST_CASE("schwartz_check examples") {
  Weights w({1, 1});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto gauss = schwartz_check(sym("(exp (- (^ (qnorm) 2)))", kXi2, w), g, 4, 2);
  CHECK(gauss.pass());
  auto one = schwartz_check(sym("1", kXi2, w), g, 4, 2);
  CHECK(!one.pass_at(1));
  auto tail = schwartz_check(sym("(cut (phi) (pow (qnorm) -6))", kXi2, w), g, 4, 2);
  CHECK(tail.pass());
  // The undifferentiated tail decays like r^-6; derivatives faster.
  CHECK(tail.rows[0].slope == doctest::Approx(-6.0).epsilon(1e-3));
  EvaluationGrid tiny(kXi2, w, GridSpec{.L = 2});
  CHECK_THROWS_AS(schwartz_check(sym("1", kXi2, w), tiny, 4, 1), InvalidParameter);
}

TEST_CASE("symbol_estimate examples") {
  Weights w({1, 1});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto a = sym("(^ xi1 2)", kXi2, w);
  CHECK(symbol_estimate(a, 2.0, w, g, 2).pass());
  CHECK(!symbol_estimate(a, 1.0, w, g, 2).pass());
  auto s = sym("(exp (- (^ (qnorm) 2)))", kXi2, w);
  for (double m : {0.0, 1.0, 3.0}) CHECK(symbol_estimate(s, m, w, g, 2).pass());
}

TEST_CASE("homogeneity_defect examples") {
  Weights w({1, 1});
  auto u = sym("(+ (^ t 2) (^ (qnorm) 2))", kXi2T, w);
  for (double s : {0.5, 1.5, 3.0}) CHECK(is_zero(homogeneity_defect(u, s, 2.0, w).expr));
  // chi(xi)|xi| with chi = 1 outside radius 1: the s=2 defect vanishes beyond radius 1.
  auto v = sym("(cut (phi) (qnorm))", kXi2, w);
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto rep = schwartz_check_difference({kXi2, compose_dilation(v.expr, kXi2, w, 2.0)}, {kXi2, 2.0 * v.expr}, g, 4, 2);
  for (const auto& row : rep.rows)
    for (std::size_t i = 1; i < row.sup.size(); ++i) CHECK(row.sup[i] <= 1e-15);
  auto ds = schwartz_check(homogeneity_defect(sym("(exp (- (^ (qnorm) 2)))", kXi2, w), 2.0, 1.5, w), g, 4, 1);
  CHECK(ds.pass());
}

TEST_CASE("hs_check examples") {
  Weights w({1, 1});
  EvaluationGrid gt(kXi2T, w, GridSpec{.span_t = true});
  auto u = sym("(+ (^ t 2) (^ (qnorm) 2))", kXi2T, w);
  CHECK(hs_check(u, 2.0, w, gt, {1.25, 1.5, 2.0}, 4, 2).pass());
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto p = sym("(+ 1 (^ (qnorm) 2))", kXi2, w);
  CHECK(!hs_check(p, 2.0, w, g, {1.5}, 4, 2).pass());
  CHECK(!hs_check(p, 1.0, w, g, {1.5}, 4, 2).pass());
  CHECK_THROWS_AS(hs_check(p, 2.0, w, g, {3.0}, 4, 2), InvalidParameter);
}

TEST_CASE("homogeneous_check examples") {
  EvaluationGrid g(kXi2, Weights({1, 1}), GridSpec{});
  CHECK(homogeneous_check(sym("(^ (qnorm) 2)", kXi2, Weights({1, 1})), 2.0, Weights({1, 1}), g).violation < 1e-13);
  Weights w12({1, 2});
  EvaluationGrid g12(kXi2, w12, GridSpec{});
  CHECK(homogeneous_check(sym("xi2", kXi2, w12), 2.0, w12, g12).violation == 0.0);
  auto rep = homogeneous_check(sym("(+ 1 (^ (qnorm) 2))", kXi2, Weights({1, 1})), 2.0, Weights({1, 1}), g);
  for (std::size_t i = 0; i < rep.s_values.size(); ++i) {
    double s = rep.s_values[i];
    CHECK(rep.unit_shell_abs[i] == doctest::Approx(std::abs(s * s - 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("derivatives of homogeneous functions drop order") {
  Weights w({2, 1});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto f = sym("(* (pow (qnorm) 3) (+ 2 (/ (^ xi2 2) (pow (qnorm) 2))))", kXi2, w);
  REQUIRE(homogeneous_check(f, 3.0, w, g).violation <= 1e-8);
  for (const auto& mi : multi_indices(2, {0, 1}, 2)) {
    auto df = differentiate(f, mi);
    CHECK(homogeneous_check(df, 3.0 - mi.homogeneous_order(kXi2, w), w, g).violation <= 1e-6);
  }
}

TEST_CASE("cut-off homogeneous functions are symbols and homogeneous modulo Schwartz") {
  Weights w({2, 1});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto a = sym("(cut (phi) (* (qnorm) (+ 1 (/ xi1 (pow (qnorm) 2)))))", kXi2, w);
  CHECK(symbol_estimate(a, 1.0, w, g, 2).pass());
  auto rep = hs_check(a, 1.0, w, g, {1.25, 1.5, 2.0}, 4, 2);
  CHECK(rep.pass());
  if (!rep.pass()) MESSAGE(to_json(rep).dump());
  // Composite dilation s = 4 = 2 * 2 keeps the defect Schwartz.
  SymbolExpr d4{kXi2, compose_dilation(a.expr, kXi2, w, 4.0)};
  CHECK(schwartz_check_difference(d4, {kXi2, 4.0 * a.expr}, g, 4, 2).pass());
}

TEST_CASE("cutoff plateaus and supports") {
  const Signature st{0, 1, true};
  Expr t = t_var(st);
  Evaluator c0(chi0(t)), c1(chi1(t)), h0(chi0(t, kExtensionProfile)), pt(phi_tilde(t));
  for (double tt : {0.0, 0.5, 1.0, -1.0}) {
    CHECK(c0(std::vector<double>{0.0, tt}) == 1.0);
    CHECK(c1(std::vector<double>{0.0, tt}) == 0.0);
    CHECK(pt(std::vector<double>{0.0, tt}) == 1.0);
  }
  for (double tt : {2.0, -2.5, 7.0}) CHECK(c0(std::vector<double>{0.0, tt}) == 0.0);
  CHECK(h0(std::vector<double>{0.0, 0.5}) == 1.0);
  CHECK(h0(std::vector<double>{0.0, 1.0}) == 0.0);
  double mid = c0(std::vector<double>{0.0, 1.5});
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  Weights w({2, 1});
  Evaluator ph(phi_cutoff(kXi2, w)), ck(chi_K(kXi2, w, 3.0));
  QuasiNorm q{w};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v = {nd(rng) * 4, nd(rng) * 2};
    double r = q(v);
    double p = ph(v), c = ck(v);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    if (r <= 0.5) CHECK(p == 0.0);
    if (r >= 1.0) CHECK(p == 1.0);
    if (r <= 3.0) CHECK(c == 0.0);
    if (r >= 6.0) CHECK(c == 1.0);
  }
}

TEST_CASE("decompose_hs") {
  Weights w({1, 1});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto u = sym("(+ (cut (phi) (qnorm)) (exp (- (^ (qnorm) 2))))", kXi2, w);
  auto dec = decompose_hs(u, 1.0, w, 1.0, g);
  auto q = sym("(qnorm)", kXi2, w);
  std::vector<double> p;
  Evaluator e1(dec.u_prime.expr), e2(q.expr);
  for (std::size_t i = 0; i < g.radii().size(); ++i)
    for (std::size_t k = 0; k < g.points_per_shell(); ++k) {
      g.point(i, k, p);
      CHECK(std::abs(e1(p) - e2(p)) <= 1e-6 * e2(p));
    }
  auto nose = decompose_hs(q, 1.0, w, 2.0, g);
  CHECK(nose.on_the_nose);
  auto far = schwartz_check(nose.u_dblprime, g.with_shells(4.5, 6), 4, 1);
  for (const auto& row : far.rows)
    for (double s : row.sup) CHECK(s <= 1e-14 * 4.5 * 64);
  auto sch = decompose_hs(sym("(exp (- (^ (qnorm) 2)))", kXi2, w), 0.0, w, 1.0, g);
  CHECK(is_zero(sch.u_prime.expr));
  CHECK_THROWS_AS(decompose_hs(u, 2.0, w, 1.0, g), NonHomogeneousError);
}

TEST_CASE("dsl parse errors and printing") {
  Weights w({1, 1});
  CHECK_THROWS_AS(parse_symbol("(+ xi1", {kXi2, w}), ParseError);
  CHECK_THROWS_AS(parse_symbol("(foo xi1)", {kXi2, w}), ParseError);
  CHECK_THROWS_AS(parse_symbol("xi3", {kXi2, w}), ParseError);
  CHECK_THROWS_AS(parse_symbol("t", {kXi2, w}), ParseError);
  try {
    parse_symbol("(+ xi1 (bar))", {kXi2, w});
  } catch (const ParseError& e) {
    CHECK(e.offset() == 7);
  }
  auto e = parse_symbol("(+ (^ t 2) (* 3 (exp (- xi1))) (pow (+ 1 (^ xi2 2)) 0.5))", {kXi2T, w});
  auto back = parse_symbol(print_symbol(e), {kXi2T, w});
  CHECK(structurally_equal(e.expr, back.expr));
}
