#include <doctest.h>

#include <cmath>
#include <random>

#include "phg/dsl.hpp"
#include "phg/errors.hpp"
#include "phg/extension.hpp"

using namespace phg;

namespace {

SymbolExpr sym(const std::string& src, Signature sig, Weights w) { return parse_symbol(src, {sig, w}); }

Expansion make_expansion(double m, Weights w, Signature sig, const std::vector<std::string>& terms) {
  Expansion e;
  e.m = m;
  e.weights = w;
  for (std::size_t j = 0; j < terms.size(); ++j)
    e.terms.push_back({sym(terms[j], sig, w), m - static_cast<double>(j), Certificate::OnTheNose});
  return e;
}

std::vector<std::vector<double>> random_points(int dim, int n, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts)
    for (auto& v : p) v = nd(rng);
  return pts;
}

const Signature kXi1{0, 1, false};
const Signature kXi2{0, 2, false};

}  // namespace

TEST_CASE("homogenize_polynomial groups by weighted degree") {
  Weights w({1, 2});
  auto u = homogenize_polynomial(sym("(+ 1 (^ xi1 2) xi2)", kXi2, w), 2, w);
  CHECK(u.sig.has_t);
  for (const auto& p : random_points(3, 20, 2.0, 1)) {
    double want = p[2] * p[2] + p[0] * p[0] + p[1];
    CHECK(evaluate(u, {p})[0] == doctest::Approx(want).epsilon(1e-14));
  }
  auto v = homogenize_polynomial(sym("(* (+ 1 xi1) (+ 1 xi1))", kXi2, w), 3, w);
  for (const auto& p : random_points(3, 10, 1.5, 2)) {
    double want = p[2] * p[2] * p[2] + 2 * p[0] * p[2] * p[2] + p[0] * p[0] * p[2];
    CHECK(evaluate(v, {p})[0] == doctest::Approx(want).epsilon(1e-13));
  }
  CHECK_THROWS_AS(homogenize_polynomial(sym("(^ xi2 2)", kXi2, w), 3, w), InvalidParameter);
  CHECK_THROWS_AS(homogenize_polynomial(sym("(exp xi1)", kXi2, w), 3, w), InvalidParameter);
}

TEST_CASE("extraction of t^2 + |xi|^2") {
  Weights w({1, 1});
  Signature st{0, 2, true};
  auto u = sym("(+ (^ t 2) (^ xi1 2) (^ xi2 2))", st, w);
  auto e = extract_expansion(u, 2.0, 3, w);
  REQUIRE(e.terms.size() == 4);
  for (const auto& p : random_points(2, 10, 3.0, 3)) {
    CHECK(evaluate(e.terms[0].a, {p})[0] == doctest::Approx(p[0] * p[0] + p[1] * p[1]));
    CHECK(evaluate(e.terms[1].a, {p})[0] == 0.0);
    CHECK(evaluate(e.terms[2].a, {p})[0] == 1.0);
    CHECK(evaluate(e.terms[3].a, {p})[0] == 0.0);
  }
  CHECK(e.terms[0].cert == Certificate::OnTheNose);
  CHECK(e.terms[2].cert == Certificate::OnTheNose);
  REQUIRE(e.remainder);
  CHECK(is_zero(e.remainder->expr));
  EvaluationGrid g(kXi2, w, GridSpec{});
  CHECK(restriction_residual(u, e, g) <= 1e-8);
}

TEST_CASE("extraction against Taylor coefficients") {
  Weights w({1});
  Signature st{0, 1, true};
  auto u = sym("(+ (^ t 3) (* t (^ xi1 2)) (exp (- (+ (^ xi1 2) (^ t 2)))))", st, w);
  auto e = extract_expansion(u, 3.0, 4, w, {1e-3, {{0.3}, {-1.2}, {2.0}}});
  REQUIRE(e.terms.size() == 5);
  for (double x : {-2.0, -0.4, 0.0, 0.9, 3.0}) {
    double g = std::exp(-x * x);
    std::vector<double> p{x};
    CHECK(evaluate(e.terms[0].a, {p})[0] == doctest::Approx(g));
    CHECK(evaluate(e.terms[1].a, {p})[0] == doctest::Approx(x * x));
    CHECK(evaluate(e.terms[2].a, {p})[0] == doctest::Approx(-g));
    CHECK(evaluate(e.terms[3].a, {p})[0] == doctest::Approx(1.0));
    CHECK(evaluate(e.terms[4].a, {p})[0] == doctest::Approx(g / 2));
  }
  CHECK(e.terms[0].cert == Certificate::ModuloSchwartz);
  CHECK(e.terms[1].cert == Certificate::OnTheNose);
  EvaluationGrid g(kXi1, w, GridSpec{});
  CHECK(restriction_residual(u, e, g) <= 1e-8);
  // u_5 near t = 0 goes through the Taylor branch; compare against the
  // series of exp(-t^2): u_5(xi, t) = -e^{-xi^2} t / 6 + O(t^3).
  auto u5 = *e.remainder;
  double t = 1e-4, x = 0.5;
  CHECK(evaluate(u5, {{x, t}})[0] == doctest::Approx(-std::exp(-x * x) * t / 6).epsilon(1e-6));
  CHECK(evaluate(u5, {{x, 0.7}})[0] ==
        doctest::Approx((std::exp(-x * x) * (std::exp(-0.49) - 1 + 0.49 - 0.49 * 0.49 / 2)) / std::pow(0.7, 5))
            .epsilon(1e-9));
}

TEST_CASE("extraction failure carries the stage label") {
  Weights w({1});
  Signature st{0, 1, true};
  auto u = sym("(pow (+ (^ t 2) (^ xi1 2)) 0.5)", st, w);
  try {
    extract_expansion(u, 1.0, 2, w, {1e-3, {{0.0}}});
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage().rfind("stage ", 0) == 0);
  }
}

TEST_CASE("make_b branches") {
  Weights w({2});
  auto a = sym("(+ (^ (qnorm) 2) (exp (- (^ xi1 2))))", kXi1, w);
  auto b = make_b_unchecked(a, 2.0, w);
  auto a_fn = [](double x) { return std::abs(x) + std::exp(-x * x); };
  for (double x : {-3.0, -0.5, 0.2, 4.0}) {
    for (double t : {0.0, 0.3, -1.0}) CHECK(evaluate(b, {{x, t}})[0] == doctest::Approx(a_fn(x)));
    for (double t : {2.0, -3.5}) {
      double want = t * t * a_fn(x / (t * t));
      CHECK(evaluate(b, {{x, t}})[0] == doctest::Approx(want));
    }
  }
  auto h = sym("(^ xi1 2)", kXi1, Weights({1}));
  CHECK(structurally_equal(make_b_unchecked(h, 2.0, Weights({1})).expr, h.expr));
  CHECK_THROWS_AS(make_b(a, 2.0, w, DecayReport{}), CertificationError);
  EvaluationGrid g(kXi1, w, GridSpec{});
  auto cert = hs_check(a, 2.0, w, g, {1.0, 1.5, 2.0}, 3, 1);
  REQUIRE(cert.pass());
  CHECK(evaluate(make_b(a, 2.0, w, cert), {{1.0, 3.0}})[0] == doctest::Approx(9.0 * a_fn(1.0 / 9.0)));
}

TEST_CASE("divide_by_t") {
  Weights w({1});
  Signature st{0, 1, true};
  auto f = sym("(- (exp t) 1)", st, w);
  auto q = divide_by_t(f, 1e-3, {{0.1, 0.0}});
  CHECK(evaluate(q, {{0.0, 0.5}})[0] == doctest::Approx((std::exp(0.5) - 1) / 0.5).epsilon(1e-14));
  CHECK(evaluate(q, {{0.0, 1e-5}})[0] == doctest::Approx(std::expm1(1e-5) / 1e-5).epsilon(1e-12));
  CHECK_THROWS_AS(divide_by_t(sym("(+ t 1e-6)", st, w), 1e-3, {{0.0, 0.0}}), NotInI0Error);
  CHECK_THROWS_AS(divide_by_t(sym("(+ xi1 1)", st, w), 1e-3), NotInI0Error);
}

TEST_CASE("epsilon schedule") {
  Weights w({1});
  EvaluationGrid g(kXi1, w, GridSpec{});
  auto one = make_expansion(0.0, w, kXi1, {"1"});
  auto s1 = epsilon_schedule(one, g, 1, 2);
  REQUIRE(s1.epsilons.size() == 1);
  CHECK(s1.epsilons[0] == 0.25);
  CHECK(s1.records[0].measured_max == doctest::Approx(1.0));

  auto zeros = make_expansion(2.0, w, kXi1, {"0", "0"});
  auto s0 = epsilon_schedule(zeros, g, 5, 2);
  std::vector<double> cap{0.25, 0.25, 1.0 / 16, 1.0 / 64, 1.0 / 256};
  REQUIRE(s0.epsilons.size() == cap.size());
  for (std::size_t j = 0; j < cap.size(); ++j) CHECK(s0.epsilons[j] == cap[j]);

  // 100 (s xi)^2 / (1 + |xi|)^2 with s <= 2 approaches 400 from below.
  auto big = make_expansion(2.0, w, kXi1, {"(* 100 (^ xi1 2))"});
  auto sb = epsilon_schedule(big, g, 1, 2);
  CHECK(sb.records[0].measured_max > 390.0);
  CHECK(sb.records[0].measured_max <= 400.0);
  CHECK(sb.epsilons[0] == doctest::Approx(1.0 / sb.records[0].measured_max));

  auto e2 = make_expansion(1.0, Weights({1, 1}), kXi2, {"(qnorm)", "(/ xi1 (qnorm))", "(/ 1 (qnorm))"});
  auto s2 = epsilon_schedule(e2, EvaluationGrid(kXi2, Weights({1, 1}), GridSpec{}), 4, 2);
  for (std::size_t j = 0; j < s2.epsilons.size(); ++j) {
    CHECK(s2.epsilons[j] > 0.0);
    CHECK(s2.epsilons[j] <= std::min(0.25, std::ldexp(1.0, -2 * static_cast<int>(j))));
    if (j > 0) CHECK(s2.epsilons[j] <= s2.epsilons[j - 1]);
  }

  auto bad = make_expansion(2.0, Weights({1, 1}), kXi2, {"(^ (qnorm) 2)", "(abs xi1)"});
  CHECK_THROWS_AS(epsilon_schedule(bad, EvaluationGrid(kXi2, Weights({1, 1}), GridSpec{}), 2, 2),
                  TermNotSymbolError);
  auto off = make_expansion(2.0, w, kXi1, {"(^ xi1 3)"});
  CHECK_THROWS_AS(epsilon_schedule(off, g, 1, 2), InvalidParameter);
}

TEST_CASE("build_extension, truncation and restriction") {
  Weights w({1, 1});
  auto e = make_expansion(2.0, w, kXi2, {"(^ (qnorm) 2)", "xi1", "1"});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto s = epsilon_schedule(e, g, 4, 2);
  auto res = build_extension(e, s);
  REQUIRE(res.parts.size() == 3);

  // j_max oracle: eps_j |xi| >= tau(t).
  std::vector<double> xi{1024.0, 0.0};
  int want = 0;
  for (double eps : s.epsilons) want += eps >= std::ldexp(1.0, -11) ? 1 : 0;
  CHECK(res.j_max(xi, 1.0) == want);
  CHECK(res.j_max(std::vector<double>{0.1, 0.0}, 0.0) == 0);

  Evaluator dense(res.b.expr);
  for (const auto& p : random_points(3, 200, 40.0, 7)) {
    double d = dense(p), tr = res.evaluate_truncated(p);
    CHECK(std::abs(d - tr) <= 1e-12 * (1.0 + std::abs(d)));
  }

  // Far from the cutoffs (eps |xi| / max(|t|, 1/2) >= 4) b is the homogeneous sum.
  double eps_min = s.epsilons[2];
  for (const auto& dir : random_points(2, 10, 1.0, 9)) {
    double n = std::hypot(dir[0], dir[1]);
    double x0 = dir[0] / n * 4.0 / eps_min, x1 = dir[1] / n * 4.0 / eps_min;
    for (double t : {0.0, 0.3, -0.8, 1.0}) {
      double want_b = x0 * x0 + x1 * x1 + t * x0 + t * t;
      CHECK(dense(std::vector<double>{x0, x1, t}) == doctest::Approx(want_b).epsilon(1e-12));
    }
  }

  auto eg = extension_grid(res.b.sig, w, s, GridSpec{});
  CHECK(eg.radii().back() >= 4.0 / eps_min);
  auto rep = hs_check(res.b, 2.0, w, eg, {1.0, 1.5, 2.0}, 3, 1);
  CHECK(rep.pass());

  // Correcting towards a = sum a_j + bump reproduces a at t = 1.
  auto a = sym("(+ (^ (qnorm) 2) xi1 1 (exp (- (^ (qnorm) 2))))", kXi2, w);
  auto u = correct_restriction(res, a, g, 3, 1);
  for (const auto& p : random_points(2, 50, 20.0, 11)) {
    std::vector<double> q{p[0], p[1], 1.0};
    double want_a = evaluate(a, {p})[0];
    CHECK(evaluate(u, {q})[0] == doctest::Approx(want_a).epsilon(1e-12));
  }
  auto wrong = sym("(+ (^ (qnorm) 2) 1)", kXi2, w);
  CHECK_THROWS_AS(correct_restriction(res, wrong, g, 3, 1), ExpansionMismatchError);

  // A schedule shorter than the expansion cannot evaluate far out.
  EpsilonSchedule shortened = s;
  shortened.epsilons.resize(1);
  auto trunc = build_extension(e, shortened);
  CHECK_THROWS_AS(trunc.evaluate_truncated(std::vector<double>{1e3, 0.0, 0.0}), HorizonError);
  CHECK_NOTHROW(trunc.evaluate_truncated(std::vector<double>{0.1, 0.0, 0.0}));
}

TEST_CASE("extract after build recovers the terms") {
  Weights w({2, 1});
  auto e = make_expansion(1.0, w, kXi2, {"(qnorm)", "(/ xi1 (^ (qnorm) 2))", "(/ xi2 (^ (qnorm) 2))"});
  EvaluationGrid g(kXi2, w, GridSpec{});
  auto s = epsilon_schedule(e, g, 3, 2);
  auto res = build_extension(e, s);
  auto back = extract_expansion(res.b, 1.0, 2, w);
  double eps_min = s.epsilons.back();
  int scale = std::max(10, static_cast<int>(std::ceil(std::log2(4.0 / eps_min))) + 1);
  for (int j = 0; j < 3; ++j) {
    auto st = split_term(back.terms[j].a, 1.0 - j, w, 1.0, g, scale);
    std::vector<double> p;
    for (std::size_t i = 0; i < g.radii().size(); ++i)
      for (std::size_t k = 0; k < g.points_per_shell(); ++k) {
        g.point(i, k, p);
        double want = evaluate(e.terms[j].a, {p})[0];
        double got = evaluate(st.prime, {p})[0];
        CHECK(std::abs(got - want) <= 1e-6 * std::abs(want) + 1e-300);
      }
  }
}
