#include "phg/extension.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "phg/errors.hpp"

namespace phg {

namespace {

using Monomials = std::map<std::vector<int>, Expr>;

// Relative homogeneity violation accepted for numerically homogeneous terms.
constexpr double kNoseTolerance = 1e-9;

// Polynomial in the xi slots with coefficients free of xi.
Monomials expand_xi(const Expr& e, const Signature& sig) {
  const int d = sig.d_xi;
  auto touches_xi = [&](const Expr& x) {
    for (int k = 0; k < d; ++k)
      if (x->depends_on(sig.xi_index(k))) return true;
    return false;
  };
  auto product = [&](const Monomials& a, const Monomials& b) {
    Monomials out;
    for (const auto& [ea, ca] : a)
      for (const auto& [eb, cb] : b) {
        std::vector<int> ex(d);
        for (int k = 0; k < d; ++k) ex[k] = ea[k] + eb[k];
        auto it = out.find(ex);
        Expr c = ca * cb;
        if (it == out.end()) out.emplace(ex, c);
        else it->second = it->second + c;
      }
    return out;
  };
  if (!touches_xi(e)) return {{std::vector<int>(d, 0), e}};
  switch (e->op()) {
    case Op::Var: {
      std::vector<int> ex(d, 0);
      ex[e->integer() - sig.xi_index(0)] = 1;
      return {{ex, constant(1.0)}};
    }
    case Op::Add: {
      Monomials out;
      for (const auto& k : e->kids())
        for (const auto& [ex, c] : expand_xi(k, sig)) {
          auto it = out.find(ex);
          if (it == out.end()) out.emplace(ex, c);
          else it->second = it->second + c;
        }
      return out;
    }
    case Op::Mul: {
      Monomials out{{std::vector<int>(d, 0), constant(1.0)}};
      for (const auto& k : e->kids()) out = product(out, expand_xi(k, sig));
      return out;
    }
    case Op::PowInt: {
      if (e->integer() < 0) break;
      Monomials base = expand_xi(e->kids()[0], sig);
      Monomials out{{std::vector<int>(d, 0), constant(1.0)}};
      for (int i = 0; i < e->integer(); ++i) out = product(out, base);
      return out;
    }
    default:
      break;
  }
  throw InvalidParameter("homogenize_polynomial: not a polynomial in xi: " + to_string(e));
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

Expr stage_numerator(const SymbolExpr& u, const Expansion& e, int j) {
  const Expr t = t_var(u.sig);
  std::vector<Expr> terms{u.expr};
  for (int i = 0; i < j; ++i)
    terms.push_back(-1.0 * (pow_int(t, i) * make_b_unchecked(e.terms[i].a, e.terms[i].order, e.weights).expr));
  return add(std::move(terms));
}

double smooth_norm(const Weights& w, const Signature& sig, std::span<const double> p) {
  return QuasiNorm{w, NormVariant::Smooth}(p.subspan(sig.xi_index(0), sig.d_xi));
}

}  // namespace

SymbolExpr homogenize_polynomial(const SymbolExpr& a, int m, const Weights& w) {
  if (a.sig.has_t) throw InvalidParameter("homogenize_polynomial: symbol already has t");
  if (w.d() != a.sig.d_xi) throw InvalidParameter("weights do not match the xi arity");
  const Signature sig = a.sig.with_t();
  const Expr t = t_var(sig);
  std::vector<Expr> terms;
  for (const auto& [ex, c] : expand_xi(a.expr, a.sig)) {
    if (is_zero(c)) continue;
    int deg = 0;
    Expr mono = c;
    for (int k = 0; k < a.sig.d_xi; ++k) {
      deg += w[k] * ex[k];
      mono = mono * pow_int(xi_var(sig, k), ex[k]);
    }
    if (deg > m)
      throw InvalidParameter("homogenize_polynomial: weighted degree " + std::to_string(deg) + " exceeds m = " +
                             std::to_string(m));
    terms.push_back(pow_int(t, m - deg) * mono);
  }
  return {sig, add(std::move(terms))};
}

SymbolExpr make_b_unchecked(const SymbolExpr& a, double m, const Weights& w, TProfile profile) {
  if (a.sig.has_t) throw InvalidParameter("make_b: symbol already has t");
  const Signature sig = a.sig.with_t();
  if (is_zero(a.expr)) return {sig, constant(0.0)};
  auto deg = homogeneous_degree(a.expr, variable_weights(a.sig, w));
  if (deg && std::abs(*deg - m) < 1e-12) return {sig, a.expr};
  const Expr t = t_var(sig);
  Expr c1 = chi1(t, profile);
  Expr far = abs_t_power(t, m) * compose_inverse_t_dilation(a.expr, sig, w);
  return {sig, chi0(t, profile) * a.expr + guard(c1, c1 * far)};
}

SymbolExpr make_b(const SymbolExpr& a, double m, const Weights& w, const DecayReport& hs_certificate,
                  TProfile profile) {
  if (hs_certificate.rows.empty() || !hs_certificate.pass())
    throw CertificationError("make_b: the symbol has no passing hs_check certificate at this order");
  return make_b_unchecked(a, m, w, profile);
}

SymbolExpr divide_by_t(const SymbolExpr& f, double t_switch, const std::vector<std::vector<double>>& probe) {
  if (!f.sig.has_t) throw InvalidParameter("divide_by_t: symbol has no t");
  const int ti = f.sig.t_index();
  if (!probe.empty()) {
    Evaluator ev(f.expr);
    for (auto p : probe) {
      if (static_cast<int>(p.size()) != f.sig.arity()) throw InvalidParameter("divide_by_t: probe arity mismatch");
      p[ti] = 0.0;
      double v = ev(p);
      if (!(std::abs(v) <= 1e-10)) throw NotInI0Error("divide_by_t: f(., ., 0) = " + std::to_string(v) + " != 0");
    }
  }
  return {f.sig, divide_by_t_power(f.expr, 1, ti, t_switch)};
}

Expansion extract_expansion(const SymbolExpr& u, double m, int N, const Weights& w, const ExtractOptions& opt) {
  if (!u.sig.has_t) throw InvalidParameter("extract_expansion: u must depend on (x, xi, t)");
  if (N < 0) throw InvalidParameter("extract_expansion: N must be >= 0");
  Expansion out;
  out.m = m;
  out.weights = w;
  const Signature base = u.sig.without_t();
  const int ti = u.sig.t_index();
  // The t-derivatives of t^i b_i vanish at t = 0 except the i-th, which is
  // i! a_i; hence u_j(., ., 0) is the j-th Taylor coefficient of u.
  Expr dj = u.expr;
  for (int j = 0; j <= N; ++j) {
    const std::string stage = "stage " + std::to_string(j);
    try {
      if (j > 0) dj = differentiate(dj, ti);
      Expr a = (1.0 / factorial(j)) * substitute(dj, {{ti, constant(0.0)}});
      ExpansionTerm term;
      term.a = {base, a};
      term.order = m - j;
      auto deg = homogeneous_degree(a, variable_weights(base, w));
      term.cert = (is_zero(a) || (deg && std::abs(*deg - term.order) < 1e-12)) ? Certificate::OnTheNose
                                                                                : Certificate::ModuloSchwartz;
      if (!opt.probe.empty()) {
        SymbolExpr b = make_b_unchecked(term.a, term.order, w);
        Evaluator eb(substitute(b.expr, {{ti, constant(0.0)}})), ea(a);
        for (const auto& p : opt.probe) {
          std::vector<double> q(p);
          q.resize(u.sig.arity(), 0.0);
          double va = ea(q), vb = eb(q);
          if (!(std::abs(va - vb) <= 1e-10 * (1.0 + std::abs(va))))
            throw NotInI0Error("u_j - b_j does not vanish at t = 0");
        }
      }
      out.terms.push_back(std::move(term));
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(stage, e.what());
    }
  }
  try {
    out.remainder = SymbolExpr{u.sig, divide_by_t_power(stage_numerator(u, out, N + 1), N + 1, ti, opt.t_switch)};
  } catch (const Error& e) {
    throw StageError("remainder", e.what());
  }
  return out;
}

SymbolExpr stage_quotient(const SymbolExpr& u, const Expansion& e, int j, double t_switch) {
  if (j < 0 || j > static_cast<int>(e.terms.size())) throw InvalidParameter("stage_quotient: j out of range");
  if (j == 0) return u;
  return {u.sig, divide_by_t_power(stage_numerator(u, e, j), j, u.sig.t_index(), t_switch)};
}

double restriction_residual(const SymbolExpr& u, const Expansion& e, const EvaluationGrid& g) {
  const Signature base = u.sig.without_t();
  if (!(g.sig() == base) || g.span_t()) throw InvalidParameter("restriction_residual: grid must be over (x, xi)");
  const Expr a = restrict_t(u, 1.0).expr;
  double worst = 0.0;
  std::vector<Expr> partial;
  for (int j = 0; j <= static_cast<int>(e.terms.size()); ++j) {
    std::vector<Expr> rhs{a};
    for (int i = 0; i < j; ++i) rhs.push_back(-1.0 * e.terms[i].a.expr);
    Expr lhs = substitute(stage_quotient(u, e, j).expr, {{u.sig.t_index(), constant(1.0)}});
    Evaluator el(lhs), er(add(std::move(rhs)));
    std::vector<double> p;
    for (std::size_t s = 0; s < g.radii().size(); ++s)
      for (std::size_t k = 0; k < g.points_per_shell(); ++k) {
        g.point(s, k, p);
        double diff = std::abs(el(p) - er(p)) / std::pow(1.0 + smooth_norm(e.weights, base, p), e.m);
        worst = std::max(worst, std::isnan(diff) ? std::numeric_limits<double>::infinity() : diff);
      }
  }
  return worst;
}

SplitTerm split_term(const SymbolExpr& a, double order, const Weights& w, double K_radius, const EvaluationGrid& g,
                     int scale_exponent, double limit_tolerance) {
  HsDecomposition d = decompose_hs(a, order, w, K_radius, g, limit_tolerance, scale_exponent);
  return {d.u_prime, d.u_dblprime, d.vanishing, d.on_the_nose};
}

EpsilonSchedule epsilon_schedule(const Expansion& e, const EvaluationGrid& g, int j_max, int deriv_max,
                                 const CheckOptions& opt) {
  if (j_max < 0) throw InvalidParameter("epsilon_schedule: j_max must be >= 0");
  if (g.span_t()) throw InvalidParameter("epsilon_schedule: grid must be over (x, xi)");
  const int n = std::max<int>(j_max, static_cast<int>(e.terms.size()));
  static const double kS[] = {1.0, 1.25, 1.5, 2.0};
  EpsilonSchedule out;
  out.grid_description = "shells r0 = " + std::to_string(g.radii().front()) + " .. " +
                         std::to_string(g.radii().back()) + ", " + std::to_string(g.points_per_shell()) +
                         " points per shell, " + std::to_string(g.base().size()) +
                         " base points, s in {1, 1.25, 1.5, 2}";
  double prev = 0.25;
  for (int j = 0; j < n; ++j) {
    ScheduleRecord rec;
    rec.j = j;
    rec.initial = std::min(0.25, std::ldexp(1.0, -2 * j));
    if (j < static_cast<int>(e.terms.size()) && !is_zero(e.terms[j].a.expr)) {
      const SymbolExpr& a = e.terms[j].a;
      if (!(a.sig == g.sig())) throw InvalidParameter("epsilon_schedule: grid signature mismatch");
      auto deg = homogeneous_degree(a.expr, variable_weights(a.sig, e.weights));
      // Scaling limits from split_term are homogeneous numerically but not
      // always syntactically.
      bool nose = deg && std::abs(*deg - e.terms[j].order) <= 1e-12;
      if (!deg && e.terms[j].cert == Certificate::OnTheNose)
        nose = homogeneous_check(a, e.terms[j].order, e.weights, g).violation <= kNoseTolerance;
      if (!nose)
        throw InvalidParameter("epsilon_schedule: term " + std::to_string(j) +
                               " is not homogeneous on the nose (run split_term first)");
      const Signature sig = a.sig;
      std::vector<int> slots;
      for (int i = 0; i < sig.n_x; ++i) slots.push_back(sig.x_index(i));
      for (int k = 0; k < sig.d_xi; ++k) slots.push_back(sig.xi_index(k));
      const Expr phi = phi_cutoff(sig, e.weights);
      // Shells out to well past the cutoff radius 1 / eps; the drift is
      // fitted beyond it, where phi(delta_eps .) = 1.
      const double r0 = g.radii().front();
      const double clear = 2.0 / rec.initial;
      const int L = std::max(static_cast<int>(g.radii().size()) - 1,
                             static_cast<int>(std::ceil(std::log2(clear / r0))) + 6);
      const EvaluationGrid gj = g.with_shells(r0, L);
      std::vector<double> tail_r;
      for (double r : gj.radii())
        if (r >= clear) tail_r.push_back(r);
      for (const auto& mi : multi_indices(sig.arity(), slots, std::min(j, deriv_max))) {
        const int beta = mi.xi_total(sig);
        const int gamma = mi.total() - beta;
        const double power = e.terms[j].order - mi.homogeneous_order(sig, e.weights);
        double c = 0.0;
        for (double s : kS) {
          Expr f = guarded_product(compose_dilation(phi, sig, e.weights, rec.initial * s),
                                   compose_dilation(a.expr, sig, e.weights, s));
          Evaluator proto(differentiate(f, mi));
          std::vector<double> ratio;
          try {
            ratio = shell_sups(
                gj, [&] { return PointFn([ev = proto](std::span<const double> p) mutable { return ev(p); }); },
                [&](std::span<const double> p) { return std::pow(1.0 + smooth_norm(e.weights, sig, p), power); });
          } catch (const DomainError& err) {
            throw TermNotSymbolError("epsilon_schedule: term " + std::to_string(j) + " at " + mi.str() + ": " +
                                     err.what());
          }
          double drift =
              fit_tail_slope(tail_r, std::vector<double>(ratio.end() - static_cast<std::ptrdiff_t>(tail_r.size()), ratio.end()));
          double sup = *std::max_element(ratio.begin(), ratio.end());
          if (!std::isfinite(sup) || drift > opt.drift_tolerance)
            throw TermNotSymbolError("epsilon_schedule: term " + std::to_string(j) + " fails the symbol estimate at " +
                                     mi.str() + " (constant " + std::to_string(sup) + ", drift " +
                                     std::to_string(drift) + ")");
          c = std::max(c, sup);
        }
        std::vector<int> gam(mi.order.begin(), mi.order.begin() + sig.n_x);
        std::vector<int> bet(mi.order.begin() + sig.n_x, mi.order.begin() + sig.n_x + sig.d_xi);
        rec.constants.emplace_back(gam, bet, j - beta - gamma, c);
        rec.measured_max = std::max(rec.measured_max, c);
      }
    }
    double eps = rec.initial;
    if (rec.measured_max > 0.0) eps = std::min(eps, std::ldexp(1.0, -2 * j) / rec.measured_max);
    eps = std::min(eps, prev);
    prev = eps;
    rec.epsilon = eps;
    out.epsilons.push_back(eps);
    out.records.push_back(std::move(rec));
  }
  return out;
}

int ExtensionResult::j_max(std::span<const double> xi, double t) const {
  const double tau = std::abs(t) <= 0.5 ? 0.5 : 0.5 * std::abs(t);
  const double r = QuasiNorm{weights, NormVariant::Smooth}(xi);
  int n = 0;
  for (double eps : schedule.epsilons) {
    if (eps * r < tau) break;
    ++n;
  }
  return n;
}

double ExtensionResult::evaluate_truncated(std::span<const double> point) const {
  const Signature& sig = b.sig;
  if (static_cast<int>(point.size()) != sig.arity()) throw InvalidParameter("evaluate_truncated: arity mismatch");
  const int n = j_max(point.subspan(sig.xi_index(0), sig.d_xi), point[sig.t_index()]);
  if (n == static_cast<int>(schedule.epsilons.size()) && expansion_terms_ > schedule.epsilons.size())
    throw HorizonError("evaluation needs terms beyond the schedule horizon (" +
                       std::to_string(schedule.epsilons.size()) + " entries)");
  double sum = 0.0;
  for (int j = 0; j < std::min<int>(n, static_cast<int>(part_eval_.size())); ++j) sum += part_eval_[j](point);
  return sum;
}

ExtensionResult build_extension(const Expansion& e, const EpsilonSchedule& schedule, const CutoffFamily& cutoffs) {
  if (e.terms.empty()) throw InvalidParameter("build_extension: empty expansion");
  if (schedule.epsilons.empty()) throw HorizonError("build_extension: empty schedule");
  const Signature base = e.terms.front().a.sig;
  const Signature sig = base.with_t();
  const Expr t = t_var(sig);
  const TProfile prof = cutoffs.extension;
  const Expr c0 = chi0(t, prof), c1 = chi1(t, prof);
  const Expr phi = phi_cutoff(base, e.weights);
  ExtensionResult out;
  out.schedule = schedule;
  out.weights = e.weights;
  out.expansion_terms_ = e.terms.size();
  const std::size_t n = std::min(e.terms.size(), schedule.epsilons.size());
  std::vector<Expr> sum;
  for (std::size_t j = 0; j < n; ++j) {
    const ExpansionTerm& term = e.terms[j];
    if (!(term.a.sig == base)) throw InvalidParameter("build_extension: mixed signatures");
    Expr part = constant(0.0);
    if (!is_zero(term.a.expr)) {
      Expr ap = guarded_product(compose_dilation(phi, base, e.weights, schedule.epsilons[j]), term.a.expr);
      Expr far = abs_t_power(t, e.m - static_cast<double>(j)) * compose_inverse_t_dilation(ap, sig, e.weights);
      part = pow_int(t, static_cast<int>(j)) * (c0 * ap + guard(c1, c1 * far));
    }
    out.parts.push_back({sig, part});
    out.part_eval_.emplace_back(part);
    sum.push_back(part);
  }
  out.b = {sig, add(std::move(sum))};
  return out;
}

SymbolExpr correct_restriction(const ExtensionResult& b, const SymbolExpr& a, const EvaluationGrid& g, int k_max,
                               int deriv_max, const CheckOptions& opt) {
  SymbolExpr b1 = restrict_t(b.b, 1.0);
  if (!(a.sig == b1.sig)) throw InvalidParameter("correct_restriction: signature mismatch");
  DecayReport rep = schwartz_check_difference(a, b1, g, k_max, deriv_max, opt);
  if (!rep.pass())
    throw ExpansionMismatchError("correct_restriction: a - b|_{t=1} is not Schwartz (worst slope " +
                                 std::to_string(rep.worst_slope()) + ")");
  Expr l = a.expr - b1.expr;
  return {b.b.sig, b.b.expr + l * phi_tilde(t_var(b.b.sig))};
}

EvaluationGrid extension_grid(const Signature& sig, const Weights& w, const EpsilonSchedule& s, GridSpec spec) {
  if (!sig.has_t) throw InvalidParameter("extension_grid: signature needs t");
  double eps_min = 0.25;
  for (double e : s.epsilons) eps_min = std::min(eps_min, e);
  spec.span_t = true;
  spec.L = std::max(spec.L, static_cast<int>(std::ceil(std::log2(4.0 / eps_min / spec.r0))) + 2);
  return EvaluationGrid(sig, w, spec);
}

nlohmann::json to_json(const Expansion& e) {
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t j = 0; j < e.terms.size(); ++j) {
    terms.push_back({{"j", j},
                     {"order", e.terms[j].order},
                     {"a", e.terms[j].a.str()},
                     {"certificate", e.terms[j].cert == Certificate::OnTheNose ? "on_the_nose" : "modulo_schwartz"}});
  }
  nlohmann::json w;
  to_json(w, e.weights);
  return {{"m", e.m}, {"weights", w}, {"terms", terms}, {"has_remainder", e.remainder.has_value()}};
}

nlohmann::json to_json(const EpsilonSchedule& s) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : s.records) {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& [gam, bet, i, c] : r.constants) cs.push_back({{"gamma", gam}, {"beta", bet}, {"i", i}, {"C", c}});
    recs.push_back({{"j", r.j},
                    {"initial", r.initial},
                    {"measured_max", r.measured_max},
                    {"epsilon", r.epsilon},
                    {"constants", cs}});
  }
  return {{"epsilons", s.epsilons}, {"grid", s.grid_description}, {"records", recs}};
}

ExtensionResult zero_extension(const Signature& sig, const Weights& w) {
  ExtensionResult out;
  out.b = {sig.with_t(), constant(0.0)};
  out.weights = w;
  return out;
}

namespace {

// (x, xi) grid whose outer shells clear 4 / eps_min.
EvaluationGrid clearing_grid(const Signature& sig, const Weights& w, const EpsilonSchedule& s, GridSpec spec) {
  double eps_min = 0.25;
  for (double e : s.epsilons) eps_min = std::min(eps_min, e);
  spec.span_t = false;
  spec.L = std::max(spec.L, static_cast<int>(std::ceil(std::log2(4.0 / eps_min / spec.r0))) + 2);
  return EvaluationGrid(sig, w, spec);
}

int split_scale(const EpsilonSchedule& s) {
  double eps_min = 0.25;
  for (double e : s.epsilons) eps_min = std::min(eps_min, e);
  return std::max(10, static_cast<int>(std::ceil(std::log2(4.0 / eps_min))) + 1);
}

// On-the-nose representative of a term: itself when certified, else the scaling limit.
ExpansionTerm nose_term(const ExpansionTerm& t, const Weights& w, const EvaluationGrid& g, const RoundTripOptions& opt,
                        int scale) {
  if (is_zero(t.a.expr)) return {t.a, t.order, Certificate::OnTheNose};
  auto deg = homogeneous_degree(t.a.expr, variable_weights(t.a.sig, w));
  if (deg && std::abs(*deg - t.order) <= 1e-12) return {t.a, t.order, Certificate::OnTheNose};
  SplitTerm st = split_term(t.a, t.order, w, opt.K_radius, g, scale);
  return {st.vanishing ? SymbolExpr{t.a.sig, constant(0.0)} : st.prime, t.order, Certificate::OnTheNose};
}

bool all_zero(const Expansion& e) {
  for (const auto& t : e.terms)
    if (!is_zero(t.a.expr)) return false;
  return true;
}

}  // namespace

RoundTripReport verify_theorem2(const SymbolExpr& u, double m, const Weights& w, const RoundTripOptions& opt) {
  if (!u.sig.has_t) throw InvalidParameter("verify_theorem2: u must depend on t");
  RoundTripReport rep;
  rep.direction = "extract-rebuild";
  const Signature base = u.sig.without_t();
  EvaluationGrid g(base, w, opt.grid);
  rep.expansion = extract_expansion(u, m, opt.N, w, {opt.t_switch, {}});
  rep.restriction_residual = restriction_residual(u, rep.expansion, g);

  Expansion nose;
  nose.m = m;
  nose.weights = w;
  for (const auto& t : rep.expansion.terms) nose.terms.push_back(nose_term(t, w, g, opt, 10));
  const SymbolExpr u1 = restrict_t(u, 1.0);
  if (all_zero(nose)) {
    rep.decay = schwartz_check(u1, g, opt.k_max, opt.deriv_max, opt.check);
  } else {
    rep.schedule = epsilon_schedule(nose, g, static_cast<int>(nose.terms.size()), opt.deriv_max, opt.check);
    ExtensionResult b = build_extension(nose, rep.schedule);
    EvaluationGrid eg = clearing_grid(base, w, rep.schedule, opt.grid);
    rep.decay = schwartz_check_difference(restrict_t(b.b, 1.0), u1, eg, opt.k_max, opt.deriv_max, opt.check);
  }
  rep.pass = rep.decay.pass() && rep.restriction_residual <= 1e-8;
  return rep;
}

RoundTripReport verify_theorem2(const Expansion& e, const Signature& sig, const RoundTripOptions& opt) {
  RoundTripReport rep;
  rep.direction = "build-extract";
  rep.expansion = e;
  const Signature base = sig.has_t ? sig.without_t() : sig;
  if (e.terms.empty()) {
    rep.pass = true;
    return rep;
  }
  EvaluationGrid g(base, e.weights, opt.grid);
  Expansion nose = e;
  for (auto& t : nose.terms) t = nose_term(t, e.weights, g, opt, 10);
  if (all_zero(nose)) {
    rep.pass = true;
    rep.term_errors.assign(nose.terms.size(), 0.0);
    return rep;
  }
  rep.schedule = epsilon_schedule(nose, g, static_cast<int>(nose.terms.size()), opt.deriv_max, opt.check);
  ExtensionResult b = build_extension(nose, rep.schedule);

  std::vector<Expr> sum;
  for (const auto& t : nose.terms) sum.push_back(t.a.expr);
  EvaluationGrid eg = clearing_grid(base, e.weights, rep.schedule, opt.grid);
  rep.decay = schwartz_check_difference(restrict_t(b.b, 1.0), {base, add(std::move(sum))}, eg, opt.k_max,
                                        opt.deriv_max, opt.check);

  Expansion back = extract_expansion(b.b, e.m, static_cast<int>(nose.terms.size()) - 1, e.weights, {opt.t_switch, {}});
  const int scale = split_scale(rep.schedule);
  bool terms_ok = true;
  std::vector<double> p;
  for (std::size_t j = 0; j < nose.terms.size(); ++j) {
    SplitTerm st = split_term(back.terms[j].a, nose.terms[j].order, e.weights, opt.K_radius, g, scale);
    Evaluator got(st.prime.expr), want(nose.terms[j].a.expr);
    double err = 0.0;
    for (std::size_t i = 0; i < g.radii().size(); ++i)
      for (std::size_t k = 0; k < g.points_per_shell(); ++k) {
        g.point(i, k, p);
        double a = got(p), b0 = want(p);
        err = std::max(err, b0 != 0.0 ? std::abs(a - b0) / std::abs(b0) : std::abs(a));
      }
    rep.term_errors.push_back(err);
    terms_ok = terms_ok && err <= opt.term_tolerance;
  }
  rep.pass = rep.decay.pass() && terms_ok;
  return rep;
}

nlohmann::json to_json(const RoundTripReport& r) {
  return {{"direction", r.direction},
          {"expansion", to_json(r.expansion)},
          {"schedule", to_json(r.schedule)},
          {"decay", to_json(r.decay)},
          {"restriction_residual", r.restriction_residual},
          {"term_errors", r.term_errors},
          {"pass", r.pass}};
}

}  // namespace phg
