#include "phg/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "phg/errors.hpp"
#include "phg/harness.hpp"

namespace phg {

using nlohmann::json;

namespace {

const std::vector<double> kHsScales{1.25, 1.5, 2.0};
constexpr int kKmax = 4;
constexpr int kDerivMax = 2;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

CheckOptions fixed_options(const RunConfig& c) {
  CheckOptions o = c.tol.check_options();
  o.slope_tolerance = 0.3;
  return o;
}

GridSpec plain_spec(const RunConfig& c) {
  GridSpec s = c.grid;
  s.span_t = false;
  return s;
}

struct Outcome {
  bool pass = false;
  std::string summary;
  json detail = json::object();
};

// -- 1: homogenize_polynomial -----------------------------------------------

struct Monomial {
  double coeff = 0.0;
  std::vector<int> xe;  // exponents of x
  std::vector<int> ae;  // exponents of xi
  int degree = 0;       // weighted degree in xi
};

Outcome c1_homogenize(const RunConfig& c) {
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_restrict = 0.0, worst_extension = 0.0, worst_violation = 0.0;
  json cases = json::array();
  for (int i = 0; i < 20; ++i) {
    const int d = 1 + i % 3;
    const int n_x = i % 2;
    const int m = i % 7;
    std::vector<int> rho(d);
    for (auto& r : rho) r = 1 + static_cast<int>(rng() % 3);
    Weights w(rho);
    Signature sig{n_x, d, false, 1};

    std::vector<Monomial> mono;
    const int count = 1 + static_cast<int>(rng() % 6);
    for (int q = 0; q < count; ++q) {
      Monomial mo;
      mo.coeff = nd(rng);
      mo.xe.resize(n_x);
      for (auto& e : mo.xe) e = static_cast<int>(rng() % 3);
      mo.ae.assign(d, 0);
      for (int k = 0; k < d; ++k) {
        const int room = (m - mo.degree) / rho[k];
        mo.ae[k] = room > 0 ? static_cast<int>(rng() % (room + 1)) : 0;
        mo.degree += rho[k] * mo.ae[k];
      }
      mono.push_back(mo);
    }
    // Top-degree term so the order is attained.
    if (m > 0 && m % rho[0] == 0) mono.push_back({nd(rng), std::vector<int>(n_x, 0), [&] {
                                                    std::vector<int> a(d, 0);
                                                    a[0] = m / rho[0];
                                                    return a;
                                                  }(),
                                                  m});

    std::vector<Expr> terms;
    for (const auto& mo : mono) {
      std::vector<Expr> f{constant(mo.coeff)};
      for (int k = 0; k < n_x; ++k) f.push_back(pow_int(x_var(sig, k), mo.xe[k]));
      for (int k = 0; k < d; ++k) f.push_back(pow_int(xi_var(sig, k), mo.ae[k]));
      terms.push_back(mul(f));
    }
    SymbolExpr a{sig, add(terms)};
    SymbolExpr u = homogenize_polynomial(a, m, w);

    // Oracle: the same monomials, t^(m - degree) attached by hand.
    auto oracle = [&](const std::vector<double>& p, double t, double& scale) {
      double s = 0.0;
      scale = 0.0;
      for (const auto& mo : mono) {
        double v = mo.coeff * std::pow(t, m - mo.degree);
        for (int k = 0; k < n_x; ++k) v *= std::pow(p[k], mo.xe[k]);
        for (int k = 0; k < d; ++k) v *= std::pow(p[n_x + k], mo.ae[k]);
        s += v;
        scale += std::abs(v);
      }
      return s;
    };

    Evaluator ue(u.expr);
    double err_r = 0.0, err_u = 0.0;
    std::vector<double> p(n_x + d + 1);
    for (int q = 0; q < 200; ++q) {
      for (int k = 0; k < n_x + d; ++k) p[k] = 2.0 * nd(rng);
      double scale = 0.0;
      p.back() = 1.0;
      double want = oracle(p, 1.0, scale);
      err_r = std::max(err_r, std::abs(ue(p) - want) / std::max(scale, 1e-300));
      p.back() = 2.0 * nd(rng);
      want = oracle(p, p.back(), scale);
      if (scale > 0.0) err_u = std::max(err_u, std::abs(ue(p) - want) / scale);
    }
    GridSpec spec = c.grid;
    spec.span_t = true;
    EvaluationGrid g(u.sig, w, spec);
    HomogeneityReport h = homogeneous_check(u, m, w, g);
    worst_restrict = std::max(worst_restrict, err_r);
    worst_extension = std::max(worst_extension, err_u);
    worst_violation = std::max(worst_violation, h.violation);
    cases.push_back({{"d", d}, {"n_x", n_x}, {"weights", rho}, {"m", m}, {"monomials", mono.size()},
                     {"restriction_error", err_r}, {"violation", h.violation}});
  }
  Outcome o;
  o.pass = worst_restrict <= 1e-12 && worst_extension <= 1e-12 && worst_violation <= 1e-12;
  o.summary = "20 polynomials, restriction error " + sci(worst_restrict) + ", extension error " +
              sci(worst_extension) + ", homogeneity violation " + sci(worst_violation);
  o.detail = {{"cases", cases},
              {"restriction_error", worst_restrict},
              {"extension_error", worst_extension},
              {"violation", worst_violation}};
  return o;
}

// -- 2: worked extraction ---------------------------------------------------

Outcome c2_extraction(const RunConfig& c) {
  Weights w(std::vector<int>{1, 1});
  Signature sig{0, 2, true, 1};
  Expr t = t_var(sig), x1 = xi_var(sig, 0), x2 = xi_var(sig, 1);
  SymbolExpr u{sig, t * t + x1 * x1 + x2 * x2};
  Expansion e = extract_expansion(u, 2.0, 2, w, {c.tol.t_switch, {}});

  Outcome o;
  if (e.terms.size() != 3 || !e.remainder) {
    o.summary = "expected three terms and a remainder";
    return o;
  }
  // Hand values.
  const std::vector<std::function<double(const std::vector<double>&)>> want{
      [](const std::vector<double>& p) { return p[0] * p[0] + p[1] * p[1]; },
      [](const std::vector<double>&) { return 0.0; },
      [](const std::vector<double>&) { return 1.0; }};
  EvaluationGrid g(sig.without_t(), w, plain_spec(c));
  std::vector<double> errs(3, 0.0);
  double rem = 0.0;
  std::vector<double> p, pt;
  Evaluator re(e.remainder->expr);
  for (int j = 0; j < 3; ++j) {
    Evaluator ae(e.terms[j].a.expr);
    for (std::size_t i = 0; i < g.radii().size(); ++i)
      for (std::size_t k = 0; k < g.points_per_shell(); ++k) {
        g.point(i, k, p);
        const double v = want[j](p);
        errs[j] = std::max(errs[j], std::abs(ae(p) - v) / std::max(1.0, std::abs(v)));
        if (j == 0)
          for (double tv : {0.0, 0.5, 1.0, 2.0}) {
            pt = p;
            pt.push_back(tv);
            rem = std::max(rem, std::abs(re(pt)));
          }
      }
  }
  o.pass = errs[0] <= 1e-10 && errs[1] <= 1e-10 && errs[2] <= 1e-10 && rem <= 1e-10;
  o.summary = "a_0 " + sci(errs[0]) + ", a_1 " + sci(errs[1]) + ", a_2 " + sci(errs[2]) + ", remainder " + sci(rem);
  o.detail = {{"term_errors", errs}, {"remainder", rem}, {"expansion", to_json(e)}};
  return o;
}

// -- 3: build_extension -----------------------------------------------------

std::vector<const CorpusEntry*> nonempty_expansions(const Corpus& corpus) {
  std::vector<const CorpusEntry*> out;
  for (const auto* e : corpus.of_class(SymbolClass::Polyhomogeneous))
    if (!e->terms.empty()) out.push_back(e);
  return out;
}

Outcome c3_build(const RunConfig& c, const Corpus& corpus) {
  Outcome o;
  auto entries = nonempty_expansions(corpus);
  std::set<int> orders;
  bool weighted = false, sizes_ok = true;
  for (const auto* e : entries) {
    orders.insert(static_cast<int>(std::lround(e->m)));
    weighted = weighted || e->weights.rho() == std::vector<int>{2, 1};
    sizes_ok = sizes_ok && e->terms.size() <= 6 && e->sig.d_xi <= 3;
  }
  const bool corpus_ok = entries.size() >= 3 && orders.count(0) && orders.count(1) && orders.count(2) && weighted &&
                         sizes_ok;
  bool all = corpus_ok;
  json per = json::array();
  double worst = -INFINITY;
  const CheckOptions opt = fixed_options(c);
  for (const auto* e : entries) {
    Expansion x = e->expansion();
    EvaluationGrid g(e->sig.without_t(), e->weights, plain_spec(c));
    EpsilonSchedule s = epsilon_schedule(x, g, static_cast<int>(x.terms.size()), kDerivMax, opt);
    ExtensionResult b = build_extension(x, s);
    EvaluationGrid eg = extension_grid(b.b.sig, e->weights, s, c.grid);
    DecayReport d = hs_check(b.b, e->m, e->weights, eg, kHsScales, kKmax, kDerivMax, opt);
    worst = std::max(worst, d.worst_slope());
    all = all && d.pass();
    per.push_back({{"entry", e->name}, {"terms", x.terms.size()}, {"epsilons", s.epsilons}, {"pass", d.pass()},
                   {"worst_slope", d.worst_slope()}});
  }
  o.pass = all;
  o.summary = std::to_string(entries.size()) + " expansions" + (corpus_ok ? "" : " (corpus does not cover m = 0, 1, 2 and rho = (2, 1))") +
              ", worst slope " + sci(worst);
  o.detail = {{"entries", per}, {"corpus_ok", corpus_ok}};
  return o;
}

// -- 4: round trips ----------------------------------------------------------

RoundTripOptions rt_options(const RunConfig& c, int N) {
  RoundTripOptions o;
  o.N = N;
  o.k_max = kKmax;
  o.deriv_max = kDerivMax;
  o.t_switch = c.tol.t_switch;
  o.term_tolerance = 1e-6;
  o.grid = plain_spec(c);
  o.check = fixed_options(c);
  return o;
}

Outcome c4_roundtrip(const RunConfig& c, const Corpus& corpus) {
  Outcome o;
  json per = json::array();
  bool all = true;
  int n_ext = 0, n_exp = 0;
  double worst_term = 0.0;
  for (const auto* e : corpus.of_class(SymbolClass::HomogeneousModSchwartz)) {
    RoundTripReport r = verify_theorem2(e->symbol(), e->m, e->weights, rt_options(c, e->N));
    all = all && r.pass;
    ++n_ext;
    per.push_back({{"entry", e->name}, {"direction", r.direction}, {"pass", r.pass},
                   {"restriction_residual", r.restriction_residual}, {"worst_slope", r.decay.worst_slope()}});
  }
  for (const auto* e : nonempty_expansions(corpus)) {
    RoundTripReport r = verify_theorem2(e->expansion(), e->sig, rt_options(c, e->N));
    all = all && r.pass;
    ++n_exp;
    for (double v : r.term_errors) worst_term = std::max(worst_term, v);
    per.push_back({{"entry", e->name}, {"direction", r.direction}, {"pass", r.pass}, {"term_errors", r.term_errors},
                   {"worst_slope", r.decay.worst_slope()}});
  }
  o.pass = all && n_ext > 0 && n_exp > 0;
  o.summary = std::to_string(n_ext) + " extensions, " + std::to_string(n_exp) + " expansions, worst term error " +
              sci(worst_term);
  o.detail = {{"entries", per}};
  return o;
}

// -- 5: restrictions of HS extensions ---------------------------------------

Outcome c5_restrictions(const RunConfig& c, const Corpus& corpus) {
  Outcome o;
  json per = json::array();
  bool all = true;
  int n = 0;
  const CheckOptions opt = fixed_options(c);
  for (const auto* e : corpus.of_class(SymbolClass::HomogeneousModSchwartz)) {
    SymbolExpr u = e->symbol();
    EvaluationGrid g(u.sig.without_t(), e->weights, plain_spec(c));
    SeminormReport s = symbol_estimate(restrict_t(u, 1.0), e->m, e->weights, g, kDerivMax, opt);
    DecayReport h = hs_check(restrict_t(u, 0.0), e->m, e->weights, g, kHsScales, kKmax, kDerivMax, opt);
    all = all && s.pass() && h.pass();
    ++n;
    per.push_back({{"entry", e->name}, {"symbol_at_1", s.pass()}, {"hs_at_0", h.pass()}});
  }
  o.pass = all && n > 0;
  o.summary = std::to_string(n) + " extensions, restrictions to t = 1 and t = 0 checked";
  o.detail = {{"entries", per}};
  return o;
}

// -- 6..10: Heisenberg model -------------------------------------------------

Outcome c6_algebra(const RunConfig& c) {
  Outcome o;
  bool all = true;
  json per = json::array();
  double worst_assoc = 0.0, worst_inv = 0.0, worst_comm = 0.0;
  for (const auto& M : {HeisenbergModel::heisenberg(1), HeisenbergModel::heisenberg(2), HeisenbergModel::abelian(2)}) {
    AlgebraResiduals a = algebra_residuals(M, 1000, c.seed);
    const bool ok = a.associativity <= 1e-12 && a.automorphism <= 1e-12 && a.left_invariance <= 1e-6 &&
                    a.commutators <= 1e-8;
    all = all && ok;
    worst_assoc = std::max({worst_assoc, a.associativity, a.automorphism});
    worst_inv = std::max(worst_inv, a.left_invariance);
    worst_comm = std::max(worst_comm, a.commutators);
    per.push_back({{"d", M.d}, {"associativity", a.associativity}, {"automorphism", a.automorphism},
                   {"left_invariance", a.left_invariance}, {"commutators", a.commutators}});
  }
  o.pass = all;
  o.summary = "group law " + sci(worst_assoc) + ", left invariance " + sci(worst_inv) + ", brackets " + sci(worst_comm);
  o.detail = {{"models", per}};
  return o;
}

Outcome c7_transpose(const RunConfig& c) {
  Outcome o;
  double worst = 0.0;
  json per = json::array();
  for (int n : {1, 2}) {
    auto M = HeisenbergModel::heisenberg(n);
    const double r = prop116_max_residual(M, 100, c.seed);
    worst = std::max(worst, r);
    per.push_back({{"d", M.d}, {"residual", r}});
  }
  o.pass = worst <= 1e-12;
  o.summary = "100 samples for d = 2, 4, residual " + sci(worst);
  o.detail = {{"models", per}};
  return o;
}

Outcome c8_chart_fourier(const RunConfig& c) {
  Outcome o;
  auto H = HeisenbergModel::heisenberg(1);
  auto A = HeisenbergModel::abelian(2);
  Theorem108Report h = thm108_gaussian(c, H);
  Theorem108Report a = thm108_gaussian(c, A);
  o.pass = h.deviation <= 1e-6 && a.deviation <= 1e-8;
  o.summary = "Heisenberg " + sci(h.deviation) + ", abelian " + sci(a.deviation) + " on " + h.grid;
  o.detail = {{"heisenberg", to_json(h)}, {"abelian", to_json(a)}};
  return o;
}

Outcome c9_zoom(const RunConfig& c) {
  Outcome o;
  double worst = 0.0;
  json per = json::array();
  for (const auto& M : {HeisenbergModel::abelian(2), HeisenbergModel::heisenberg(1)}) {
    for (const auto& r : prop123_gaussian(c, M)) {
      worst = std::max(worst, r.deviation);
      json j = to_json(r);
      j["abelian"] = M.B.isZero(0.0);
      per.push_back(j);
    }
  }
  o.pass = worst <= 1e-6;
  o.summary = "s in {1.5, 2}, both models, deviation " + sci(worst);
  o.detail = {{"runs", per}};
  return o;
}

Outcome c10_quantization(const RunConfig& c) {
  Outcome o;
  auto M = HeisenbergModel::heisenberg(1);
  const BoxGrid& g = c.heisenberg.kernel_grid;
  if (g.dim() != M.dim()) throw ConfigError("heisenberg.kernel_grid must have dimension 3");
  const Signature ss = M.space_signature();
  std::vector<Expr> sq;
  for (int k = 0; k < M.dim(); ++k) sq.push_back(pow_int(x_var(ss, k), 2));
  SymbolExpr phi{ss, exp_of(-add(sq))};
  SymbolExpr one{M.symbol_signature(false), constant(1.0)};

  // Oracles: phi and -i d_0 phi in closed form.
  auto gauss = [](const std::vector<double>& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); };
  CVec id = quantize(M, one, phi, g);
  CVec op = quantize(M, sigma_symbol(M, 0), phi, g);
  double e_id = 0.0, e_op = 0.0;
  std::vector<double> x;
  for (std::size_t i = 0; i < g.total(); ++i) {
    g.x_point(i, x);
    const double f = gauss(x);
    e_id = std::max(e_id, std::abs(id[i] - Complex(f, 0.0)));
    e_op = std::max(e_op, std::abs(op[i] - Complex(0.0, 2.0 * x[0] * f)));
  }
  o.pass = e_id <= 1e-10 && e_op <= 1e-6;
  o.summary = "Op(1) " + sci(e_id) + ", Op(sigma_0) " + sci(e_op) + " on " + g.describe();
  o.detail = {{"identity_error", e_id}, {"sigma0_error", e_op}, {"grid", g.describe()}};
  return o;
}

}  // namespace

const std::vector<CriterionInfo>& acceptance_criteria() {
  static const std::vector<CriterionInfo> list{
      {1, "homogenize", "polynomial homogenization is exact", 1.0},
      {2, "extraction", "worked extraction of t^2 + |xi|^2", 5.0},
      {3, "build_extension", "built extensions are homogeneous modulo Schwartz", 300.0},
      {4, "round_trip", "expansion and extension round trips", 300.0},
      {5, "restrictions", "restrictions of HS extensions at t = 1 and t = 0", 120.0},
      {6, "algebra", "Heisenberg group law and fields", 10.0},
      {7, "transpose", "chart transpose equals the symbol change", 1.0},
      {8, "chart_fourier", "chart push-forward and Fourier diagram closes", 60.0},
      {9, "zoom", "zoom actions intertwine", 30.0},
      {10, "quantization", "quantization sanity", 10.0}};
  return list;
}

const CriterionInfo& find_criterion(const std::string& name) {
  for (const auto& c : acceptance_criteria())
    if (name == std::to_string(c.id) || name == c.key) return c;
  throw ConfigError("unknown criterion '" + name + "'");
}

std::vector<CriterionResult> run_acceptance(const RunConfig& c, const Corpus& corpus,
                                            const std::vector<std::string>& only, const CriterionCallback& on_done) {
  std::set<int> selected;
  for (const auto& n : only) selected.insert(find_criterion(n).id);
  std::vector<CriterionResult> out;
  for (const auto& info : acceptance_criteria()) {
    if (!selected.empty() && !selected.count(info.id)) continue;
    CriterionResult r;
    r.info = info;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Outcome o;
      switch (info.id) {
        case 1: o = c1_homogenize(c); break;
        case 2: o = c2_extraction(c); break;
        case 3: o = c3_build(c, corpus); break;
        case 4: o = c4_roundtrip(c, corpus); break;
        case 5: o = c5_restrictions(c, corpus); break;
        case 6: o = c6_algebra(c); break;
        case 7: o = c7_transpose(c); break;
        case 8: o = c8_chart_fourier(c); break;
        case 9: o = c9_zoom(c); break;
        case 10: o = c10_quantization(c); break;
      }
      r.pass = o.pass;
      r.summary = o.summary;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.summary = std::string("error: ") + e.what();
      r.detail = {{"error", e.what()}};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > info.budget) {
      r.pass = false;
      r.summary += " (over the " + sci(info.budget) + " s budget)";
    }
    if (on_done) on_done(r);
    out.push_back(std::move(r));
  }
  return out;
}

json acceptance_summary(const RunConfig& c, const std::vector<CriterionResult>& results) {
  json cfg;
  to_json(cfg, c);
  json list = json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    list.push_back({{"id", r.info.id},
                    {"key", r.info.key},
                    {"property", r.info.title},
                    {"pass", r.pass},
                    {"detail", r.detail}});
  }
  return {{"command", "accept"}, {"seed", c.seed}, {"config", cfg}, {"criteria", list}, {"pass", all}};
}

std::string format_result_line(const CriterionResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "%s %2d %-16s", r.pass ? "PASS" : "FAIL", r.info.id, r.info.key.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " [%.2f s]", r.seconds);
  return std::string(head) + r.info.title + ": " + r.summary + tail;
}

}  // namespace phg
