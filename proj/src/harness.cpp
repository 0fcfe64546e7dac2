#include "phg/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "phg/dsl.hpp"
#include "phg/errors.hpp"

namespace phg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<double> kHsScales{1.25, 1.5, 2.0};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json header(const RunConfig& c, const std::string& command, const std::string& property) {
  json cfg;
  to_json(cfg, c);
  return {{"command", command}, {"property", property}, {"seed", c.seed}, {"config", cfg}};
}

json header(const RunConfig& c, const std::string& command, const std::string& property, const CorpusEntry& e) {
  json h = header(c, command, property);
  json ej;
  to_json(ej, e);
  h["entry"] = ej;
  return h;
}

struct Writer {
  fs::path dir;
  CommandResult* res;

  void put(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    std::string p = (dir / name).string();
    write_file_atomic(p, content);
    res->files.push_back(p);
  }
  void put_json(const std::string& name, const json& j) { put(name, j.dump(2) + "\n"); }
};

CheckOptions options(const RunConfig& c) { return c.tol.check_options(); }

GridSpec fiber_spec(const RunConfig& c, bool span_t) {
  GridSpec s = c.grid;
  s.span_t = span_t;
  return s;
}

void finish(CommandResult& r, bool pass, const std::string& what) {
  r.exit_code = pass ? kExitPass : kExitFail;
  r.report["pass"] = pass;
  r.summary = std::string(pass ? "PASS " : "FAIL ") + what;
}

CommandResult usage(const std::string& msg) {
  CommandResult r;
  r.exit_code = kExitUsage;
  r.summary = "error: " + msg;
  return r;
}

// Homogeneity of a term of an expansion, syntactic first, then sampled.
json term_homogeneity(const SymbolExpr& a, double order, const Weights& w, const EvaluationGrid& g, double tol,
                      bool& ok) {
  json t = {{"order", order}, {"a", print_symbol(a)}};
  if (is_zero(a.expr)) {
    t["syntactic_degree"] = "zero";
    t["violation"] = 0.0;
    return t;
  }
  auto deg = homogeneous_degree(a.expr, variable_weights(a.sig, w));
  t["syntactic_degree"] = deg ? json(*deg) : json(nullptr);
  HomogeneityReport h = homogeneous_check(a, order, w, g);
  t["violation"] = h.violation;
  t["violation_per_s"] = h.violation_per_s;
  ok = ok && h.violation <= tol && (!deg || std::abs(*deg - order) <= 1e-12);
  return t;
}

RoundTripOptions roundtrip_options(const RunConfig& c, int N) {
  RoundTripOptions o;
  o.N = N;
  o.k_max = c.tol.k_max;
  o.deriv_max = c.tol.deriv_max;
  o.t_switch = c.tol.t_switch;
  o.grid = c.grid;
  o.grid.span_t = false;
  o.check = options(c);
  return o;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw ConfigError("short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot rename " + tmp + ": " + ec.message());
  }
}

// -- corpus commands --------------------------------------------------------

CommandResult cmd_check(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir) {
  CommandResult r;
  Writer w{fs::path(out_dir) / e.name, &r};
  const Tolerances& t = c.tol;
  switch (e.cls) {
    case SymbolClass::Schwartz: {
      SymbolExpr f = e.symbol();
      EvaluationGrid g(f.sig, e.weights, fiber_spec(c, f.sig.has_t));
      const int k = e.k > 0 ? e.k : t.k_max;
      DecayReport d = schwartz_check(f, g, k, t.deriv_max, options(c));
      r.report = header(c, "check", "rapid decay: r^k sup |D^beta f| stays bounded on dyadic shells for k <= k_max", e);
      r.report["decay"] = to_json(d);
      r.report["passed_order"] = d.passed_order();
      w.put("check.csv", decay_csv(d, f.sig));
      finish(r, d.pass(), e.name + ": Schwartz to order " + std::to_string(k) + " (passed order " +
                              std::to_string(d.passed_order()) + ", worst slope " + sci(d.worst_slope()) + ")");
      break;
    }
    case SymbolClass::Symbol: {
      SymbolExpr f = e.symbol();
      EvaluationGrid g(f.sig, e.weights, fiber_spec(c, false));
      SeminormReport s = symbol_estimate(f, e.m, e.weights, g, t.deriv_max, options(c));
      r.report = header(c, "check", "symbol estimate |D_x D_xi^beta a| <= C (1 + |xi|)^(m - |beta|)", e);
      r.report["seminorms"] = to_json(s);
      w.put("check.csv", seminorm_csv(s, f.sig));
      double drift = -INFINITY;
      for (const auto& row : s.rows) drift = std::max(drift, row.drift);
      finish(r, s.pass(), e.name + ": S^" + num(e.m) + " (worst drift " + sci(drift) + ")");
      break;
    }
    case SymbolClass::Homogeneous: {
      SymbolExpr f = e.symbol();
      EvaluationGrid g(f.sig, e.weights, fiber_spec(c, f.sig.has_t));
      bool ok = true;
      json h = term_homogeneity(f, e.m, e.weights, g, t.homogeneity_tolerance, ok);
      r.report = header(c, "check", "homogeneity on the nose: f(x, delta_s xi) = s^m f(x, xi)", e);
      r.report["homogeneity"] = h;
      finish(r, ok, e.name + ": homogeneous of order " + num(e.m) + " (violation " + sci(h["violation"].get<double>()) + ")");
      break;
    }
    case SymbolClass::HomogeneousModSchwartz: {
      SymbolExpr u = e.symbol();
      EvaluationGrid g(u.sig, e.weights, fiber_spec(c, true));
      DecayReport d = hs_check(u, e.m, e.weights, g, kHsScales, t.k_max, t.deriv_max, options(c));
      r.report = header(c, "check", "homogeneity modulo Schwartz: u(x, delta_s xi, s t) - s^m u(x, xi, t) is Schwartz", e);
      r.report["decay"] = to_json(d);
      w.put("check.csv", decay_csv(d, u.sig));
      finish(r, d.pass(), e.name + ": HS^" + num(e.m) + " (worst slope " + sci(d.worst_slope()) + ")");
      break;
    }
    case SymbolClass::Polyhomogeneous: {
      Expansion x = e.expansion();
      EvaluationGrid g(e.sig.without_t(), e.weights, fiber_spec(c, false));
      bool ok = true;
      json terms = json::array();
      for (const auto& term : x.terms)
        terms.push_back(term_homogeneity(term.a, term.order, e.weights, g, t.homogeneity_tolerance, ok));
      r.report = header(c, "check", "polyhomogeneous expansion: a_j homogeneous of order m - j on the nose", e);
      r.report["terms"] = terms;
      finish(r, ok, e.name + ": " + std::to_string(x.terms.size()) + " homogeneous terms");
      break;
    }
  }
  w.put_json("check.json", r.report);
  return r;
}

CommandResult cmd_extract(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir) {
  if (e.cls != SymbolClass::HomogeneousModSchwartz)
    return usage(e.name + ": extract needs an HS^m entry (class is " + class_name(e.cls) + ")");
  CommandResult r;
  Writer w{fs::path(out_dir) / e.name, &r};
  const Tolerances& t = c.tol;
  SymbolExpr u = e.symbol();
  Expansion x;
  try {
    x = extract_expansion(u, e.m, e.N, e.weights, {t.t_switch, {}});
  } catch (const Error& err) {
    throw StageError("extract", err.what());
  }
  EvaluationGrid g(u.sig.without_t(), e.weights, fiber_spec(c, false));
  const double residual = restriction_residual(u, x, g);
  bool ok = residual <= 1e-8;
  json terms = json::array();
  for (std::size_t j = 0; j < x.terms.size(); ++j) {
    const auto& term = x.terms[j];
    const std::string stem = "a_" + std::to_string(j);
    w.put(stem + ".dsl", print_symbol(term.a) + "\n");
    json tj = {{"j", j}, {"order", term.order}, {"a", print_symbol(term.a)}, {"file", stem + ".dsl"}};
    if (is_zero(term.a.expr)) {
      tj["hs_pass"] = true;
    } else {
      DecayReport d = hs_check(term.a, term.order, e.weights, g, kHsScales, t.k_max, t.deriv_max, options(c));
      tj["hs_pass"] = d.pass();
      tj["hs"] = to_json(d);
      w.put(stem + "_hs.csv", decay_csv(d, term.a.sig));
      ok = ok && d.pass();
    }
    terms.push_back(tj);
  }
  if (x.remainder) w.put("remainder.dsl", print_symbol(*x.remainder) + "\n");
  r.report = header(c, "extract", "Taylor expansion at t = 0 of an HS extension: a_j homogeneous modulo Schwartz", e);
  r.report["expansion"] = to_json(x);
  r.report["restriction_residual"] = residual;
  r.report["terms"] = terms;
  w.put_json("expansion.json", to_json(x));
  finish(r, ok, e.name + ": extracted " + std::to_string(x.terms.size()) + " terms (restriction residual " +
                    sci(residual) + ")");
  w.put_json("extract.json", r.report);
  return r;
}

CommandResult cmd_extend(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir) {
  if (e.cls != SymbolClass::Polyhomogeneous)
    return usage(e.name + ": extend needs an S^m_phg entry (class is " + class_name(e.cls) + ")");
  CommandResult r;
  Writer w{fs::path(out_dir) / e.name, &r};
  const Tolerances& t = c.tol;
  Expansion x = e.expansion();
  r.report = header(c, "extend", "extension of a polyhomogeneous expansion is homogeneous modulo Schwartz", e);
  if (x.terms.empty()) {
    ExtensionResult z = zero_extension(e.sig, e.weights);
    w.put("extension.dsl", print_symbol(z.b) + "\n");
    r.report["extension"] = print_symbol(z.b);
    r.report["schedule"] = to_json(z.schedule);
    finish(r, true, e.name + ": empty expansion, zero extension");
    w.put_json("extend.json", r.report);
    return r;
  }
  EvaluationGrid g(e.sig.without_t(), e.weights, fiber_spec(c, false));
  EpsilonSchedule s;
  try {
    s = epsilon_schedule(x, g, static_cast<int>(x.terms.size()), t.deriv_max, options(c));
  } catch (const Error& err) {
    throw StageError("schedule", err.what());
  }
  ExtensionResult b = build_extension(x, s);
  EvaluationGrid eg = extension_grid(b.b.sig, e.weights, s, c.grid);
  DecayReport d = hs_check(b.b, e.m, e.weights, eg, kHsScales, t.k_max, t.deriv_max, options(c));
  w.put("extension.dsl", print_symbol(b.b) + "\n");
  json sj = to_json(s);
  sj["provenance"] = {{"entry", e.name}, {"seed", c.seed}, {"grid", s.grid_description}};
  w.put_json("schedule.json", sj);
  w.put("extend.csv", decay_csv(d, b.b.sig));
  r.report["schedule"] = to_json(s);
  r.report["decay"] = to_json(d);
  finish(r, d.pass(), e.name + ": extension of " + std::to_string(x.terms.size()) + " terms (worst slope " +
                          sci(d.worst_slope()) + ")");
  w.put_json("extend.json", r.report);
  return r;
}

CommandResult cmd_roundtrip(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir) {
  CommandResult r;
  Writer w{fs::path(out_dir) / e.name, &r};
  RoundTripReport rt;
  std::string how;
  switch (e.cls) {
    case SymbolClass::HomogeneousModSchwartz:
      rt = verify_theorem2(e.symbol(), e.m, e.weights, roundtrip_options(c, e.N));
      how = "extension";
      break;
    case SymbolClass::Polyhomogeneous:
      rt = verify_theorem2(e.expansion(), e.sig, roundtrip_options(c, e.N));
      how = "expansion";
      break;
    case SymbolClass::Symbol: {
      const int m = static_cast<int>(std::lround(e.m));
      if (m < 0 || std::abs(e.m - m) > 0) return usage(e.name + ": only polynomial symbols of integer order m >= 0");
      SymbolExpr u;
      try {
        u = homogenize_polynomial(e.symbol(), m, e.weights);
      } catch (const Error& err) {
        return usage(e.name + ": " + err.what());
      }
      rt = verify_theorem2(u, m, e.weights, roundtrip_options(c, m));
      how = "homogenized polynomial";
      break;
    }
    default:
      return usage(e.name + ": roundtrip needs an HS^m, S^m_phg or polynomial S^m entry");
  }
  r.report = header(c, "roundtrip",
                    "polyhomogeneous symbols are the restrictions to t = 1 of extensions homogeneous modulo Schwartz",
                    e);
  r.report["source"] = how;
  r.report["round_trip"] = to_json(rt);
  if (!rt.decay.rows.empty()) w.put("roundtrip.csv", decay_csv(rt.decay, e.sig.without_t()));
  std::string detail = rt.direction;
  if (!rt.term_errors.empty()) {
    double worst = 0.0;
    for (double v : rt.term_errors) worst = std::max(worst, v);
    detail += ", worst term error " + sci(worst);
  }
  finish(r, rt.pass, e.name + ": " + detail);
  w.put_json("roundtrip.json", r.report);
  return r;
}

// -- Heisenberg residuals ---------------------------------------------------

Weights heisenberg_weights(const HeisenbergModel& M) {
  std::vector<int> rho(M.dim(), 1);
  rho[0] = 2;
  return Weights(rho);
}

namespace {

Vec normal_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

Expr space_var(int i) { return variable(i); }

// Generic smooth test functions on R^{d+1}.
Expr invariance_probe(const HeisenbergModel& M) {
  const int d = M.d;
  return space_var(0) * space_var(1) + exp_of(0.3 * space_var(d)) + pow_int(space_var(0), 2) +
         space_var(1) * space_var(d) * space_var(d);
}

Expr commutator_probe(const HeisenbergModel& M) {
  const int d = M.d;
  std::vector<Expr> prod;
  for (int k = 1; k <= d; ++k) prod.push_back(space_var(k));
  return space_var(0) * space_var(0) * space_var(1) + exp_of(0.2 * space_var(d)) +
         space_var(d) * space_var(std::max(1, d - 1)) * space_var(0) + mul(prod);
}

}  // namespace

AlgebraResiduals algebra_residuals(const HeisenbergModel& M, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sd(0.25, 4.0);
  AlgebraResiduals r;
  r.samples = samples;
  const int D = M.dim();
  for (int i = 0; i < samples; ++i) {
    Vec a = normal_vec(rng, D), b = normal_vec(rng, D), c = normal_vec(rng, D);
    Vec l = group_mul(M, group_mul(M, a, b), c), rr = group_mul(M, a, group_mul(M, b, c));
    r.associativity = std::max(r.associativity, (l - rr).lpNorm<Eigen::Infinity>() / (1.0 + l.lpNorm<Eigen::Infinity>()));
    const double s = sd(rng);
    Vec dl = heis_dilate(s, group_mul(M, a, b)), dr = group_mul(M, heis_dilate(s, a), heis_dilate(s, b));
    r.automorphism = std::max(r.automorphism, (dl - dr).lpNorm<Eigen::Infinity>() / (1.0 + dl.lpNorm<Eigen::Infinity>()));
  }

  // X_j (f o L_y)(x) = (X_j f)(y.x) with f o L_y built by substitution.
  SymbolExpr f{M.space_signature(), invariance_probe(M)};
  const int inv_samples = std::min(samples, 50);
  for (int i = 0; i < inv_samples; ++i) {
    Vec y = normal_vec(rng, D), x = normal_vec(rng, D);
    std::map<int, Expr> repl;
    for (int k = 0; k < D; ++k) repl[k] = y[k] + variable(k);
    Expr bil = constant(0.0);
    for (int j = 1; j <= M.d; ++j)
      for (int k = 1; k <= M.d; ++k)
        if (M.b(j, k) != 0.0) bil = bil + (0.5 * M.b(j, k) * y[k]) * variable(j);
    repl[0] = repl[0] + bil;
    SymbolExpr fl{f.sig, substitute(f.expr, repl)};
    for (int j = 0; j <= M.d; ++j) {
      const double lhs = model_field_apply(M, j, fl, x);
      const double rhs = model_field_apply(M, j, f, group_mul(M, y, x));
      r.left_invariance = std::max(r.left_invariance, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
  }

  // [X_a, X_b] = b_{ba} X_0 for a, b >= 1 and [X_0, X_b] = 0.
  Expr g = commutator_probe(M);
  Evaluator x0g(model_field(M, 0, g));
  std::vector<std::vector<Evaluator>> br(D, std::vector<Evaluator>(D));
  for (int a = 0; a < D; ++a)
    for (int b = a + 1; b < D; ++b)
      br[a][b] = Evaluator(model_field(M, a, model_field(M, b, g)) - model_field(M, b, model_field(M, a, g)));
  for (int i = 0; i < std::min(samples, 20); ++i) {
    Vec p = normal_vec(rng, D);
    std::vector<double> pt(p.data(), p.data() + p.size());
    const double x0 = x0g(pt);
    for (int a = 0; a < D; ++a)
      for (int b = a + 1; b < D; ++b) {
        const double want = a >= 1 ? M.b(b, a) * x0 : 0.0;
        r.commutators = std::max(r.commutators, std::abs(br[a][b](pt) - want));
      }
  }
  return r;
}

ChartResiduals chart_residuals(const HeisenbergModel& M, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> td(0.2, 1.5);
  ChartResiduals r;
  r.samples = samples;
  const int D = M.dim();
  auto flow = [&](const Vec& y, const Vec& w) {
    auto field = [&](const Vec& p) {
      Vec out = w;
      for (int j = 1; j <= M.d; ++j)
        for (int k = 1; k <= M.d; ++k) out[0] += w[j] * 0.5 * M.b(j, k) * p[k];
      return out;
    };
    Vec p = y;
    const int steps = 200;
    const double h = 1.0 / steps;
    for (int i = 0; i < steps; ++i) {
      Vec k1 = field(p), k2 = field(p + 0.5 * h * k1), k3 = field(p + 0.5 * h * k2), k4 = field(p + h * k3);
      p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return p;
  };
  const double det_want = (M.d % 2 == 0) ? -1.0 : 1.0;
  for (int i = 0; i < samples; ++i) {
    Vec y = normal_vec(rng, D), v = normal_vec(rng, D), eta = normal_vec(rng, D);
    const double t = (i % 2 ? -1.0 : 1.0) * td(rng);
    ChartPoint p = exp_chart(M, y, v, t);
    // delta_t(-v) with t^2 on slot 0, valid for either sign of t.
    Vec w = -v;
    w[0] *= t * t;
    for (int k = 1; k < D; ++k) w[k] *= t;
    Vec want = flow(y, w);
    r.flow = std::max(r.flow, (p.second - want).lpNorm<Eigen::Infinity>() / (1.0 + want.lpNorm<Eigen::Infinity>()));
    r.inverse = std::max(r.inverse, (exp_chart_inverse(M, y, p.second, t) - v).lpNorm<Eigen::Infinity>());
    r.phi_determinant = std::max(r.phi_determinant, std::abs(phi_y_matrix(M, y).determinant() - det_want));
    r.sigma_round_trip =
        std::max(r.sigma_round_trip, (sigma(M, y, sigma_tilde(M, y, eta)) - eta).lpNorm<Eigen::Infinity>());
  }
  return r;
}

double prop116_max_residual(const HeisenbergModel& M, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vec y = normal_vec(rng, M.dim()), eta = normal_vec(rng, M.dim());
    worst = std::max(worst, prop116_residual(M, y, eta));
  }
  return worst;
}

Theorem108Report thm108_gaussian(const RunConfig& c, const HeisenbergModel& M) {
  const BoxGrid& g = c.heisenberg.kernel_grid;
  if (g.dim() != M.dim()) throw ConfigError("heisenberg.kernel_grid must have dimension d + 1");
  std::vector<Expr> sq;
  const Signature sig = M.symbol_signature(false);
  for (int k = 0; k < M.dim(); ++k) sq.push_back(pow_int(xi_var(sig, k), 2));
  SymbolExpr f{sig, exp_of(-add(sq))};
  return theorem108_check(M, f, g, default_base_points(M, c.heisenberg.base_points, c.seed));
}

std::vector<Prop123Report> prop123_gaussian(const RunConfig& c, const HeisenbergModel& M) {
  const BoxGrid& g = c.heisenberg.zoom_grid;
  if (g.dim() != M.dim()) throw ConfigError("heisenberg.zoom_grid must have dimension d + 1");
  const Signature sig = M.symbol_signature(true);
  std::vector<Expr> sq;
  for (int k = 0; k < M.dim(); ++k) sq.push_back(pow_int(xi_var(sig, k), 2));
  SymbolExpr f{sig, exp_of(-((1.0 / 6.0) * add(sq) + pow_int(t_var(sig), 2)))};
  SymbolExpr u = pull_back_sigma(M, f);
  auto base = default_base_points(M, c.heisenberg.zoom_base_points, c.seed);
  std::vector<Prop123Report> out;
  for (double s : c.heisenberg.s_values) out.push_back(prop123_check(M, u, g, base, c.heisenberg.t_values, s));
  return out;
}

CommandResult cmd_heisenberg(const RunConfig& c, const HeisenbergModel& M, const std::string& check,
                             const std::string& out_dir) {
  CommandResult r;
  Writer w{fs::path(out_dir) / "heisenberg", &r};
  json model;
  to_json(model, M);
  const bool abelian = M.B.isZero(0.0);
  if (check == "algebra") {
    AlgebraResiduals a = algebra_residuals(M, c.heisenberg.algebra_samples, c.seed);
    r.report = header(c, "heisenberg",
                      "group law: associativity, dilations are automorphisms, left-invariant fields and their brackets");
    r.report["residuals"] = {{"associativity", a.associativity},
                             {"automorphism", a.automorphism},
                             {"left_invariance", a.left_invariance},
                             {"commutators", a.commutators},
                             {"samples", a.samples}};
    r.report["tolerances"] = {{"associativity", 1e-12}, {"automorphism", 1e-12}, {"left_invariance", 1e-6},
                              {"commutators", 1e-8}};
    const bool ok = a.associativity <= 1e-12 && a.automorphism <= 1e-12 && a.left_invariance <= 1e-6 &&
                    a.commutators <= 1e-8;
    finish(r, ok, "algebra: associativity " + sci(a.associativity) + ", automorphism " + sci(a.automorphism) +
                      ", left invariance " + sci(a.left_invariance) + ", commutators " + sci(a.commutators));
  } else if (check == "chart") {
    ChartResiduals ch = chart_residuals(M, 100, c.seed);
    r.report = header(c, "heisenberg", "exponential chart: closed form against the flow, chart inverse, phi_y and sigma");
    r.report["residuals"] = {{"flow", ch.flow},
                             {"inverse", ch.inverse},
                             {"phi_determinant", ch.phi_determinant},
                             {"sigma_round_trip", ch.sigma_round_trip},
                             {"samples", ch.samples}};
    const bool ok = ch.flow <= 1e-8 && ch.inverse <= 1e-10 && ch.phi_determinant <= 1e-12 &&
                    ch.sigma_round_trip <= 1e-12;
    finish(r, ok, "chart: flow " + sci(ch.flow) + ", inverse " + sci(ch.inverse) + ", det " +
                      sci(ch.phi_determinant) + ", sigma " + sci(ch.sigma_round_trip));
  } else if (check == "prop116") {
    const double res = prop116_max_residual(M, c.heisenberg.prop116_samples, c.seed);
    r.report = header(c, "heisenberg",
                      "transpose of the chart differential is the symbol change: (phi_y^-1)^T eta = sigma~(y, -eta)");
    r.report["prop116_residual"] = res;
    r.report["samples"] = c.heisenberg.prop116_samples;
    r.report["tolerance"] = 1e-12;
    finish(r, res <= 1e-12, "prop116: residual " + sci(res));
  } else if (check == "thm108") {
    Theorem108Report t = thm108_gaussian(c, M);
    const double tol = abelian ? 1e-8 : 1e-6;
    r.report = header(c, "heisenberg",
                      "chart push-forward of the kernel followed by the partial Fourier transform returns the symbol");
    r.report["thm108_linf"] = t.deviation;
    r.report["detail"] = to_json(t);
    r.report["tolerance"] = tol;
    finish(r, t.deviation <= tol, "thm108: relative closure error " + sci(t.deviation));
  } else if (check == "prop123") {
    auto reps = prop123_gaussian(c, M);
    double worst = 0.0;
    json per = json::array();
    for (const auto& p : reps) {
      worst = std::max(worst, p.deviation);
      per.push_back(to_json(p));
    }
    r.report = header(c, "heisenberg", "zoom actions intertwine through the partial Fourier transform");
    r.report["prop123_linf"] = worst;
    r.report["per_s"] = per;
    r.report["tolerance"] = 1e-6;
    finish(r, worst <= 1e-6, "prop123: deviation " + sci(worst));
  } else {
    return usage("unknown heisenberg check '" + check + "' (algebra, chart, prop116, thm108, prop123)");
  }
  r.report["model"] = model;
  r.report["check"] = check;
  w.put_json(check + ".json", r.report);
  return r;
}

}  // namespace phg
