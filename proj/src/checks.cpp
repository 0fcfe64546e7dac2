#include "phg/checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "phg/cutoffs.hpp"
#include "phg/errors.hpp"
#include "phg/parallel.hpp"

namespace phg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_shells(const EvaluationGrid& g) {
  if (g.radii().size() < 4) throw InvalidParameter("grid too small to fit a slope (needs >= 4 shells)");
}

std::string part(const MultiIndex& mi, int from, int to) {
  std::string s = "(";
  for (int i = from; i < to; ++i) {
    if (i > from) s += ",";
    s += std::to_string(mi.order[i]);
  }
  return s + ")";
}

}  // namespace

double fit_tail_slope(const std::vector<double>& radii, const std::vector<double>& sup) {
  const std::size_t n = radii.size();
  if (n < 2) return 0.0;
  if (sup.back() == 0.0) return -kInf;
  const std::size_t first = (n - 1) / 2;
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < n; ++i) {
    if (!(sup[i] > 0.0)) continue;
    if (!std::isfinite(sup[i])) return kInf;
    xs.push_back(std::log(radii[i]));
    ys.push_back(std::log(sup[i]));
  }
  if (xs.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> shell_sups(const EvaluationGrid& g, const std::function<PointFn()>& make_fn,
                               const std::function<double(std::span<const double>)>& weight) {
  const std::size_t per = g.points_per_shell();
  const std::size_t shells = g.radii().size();
  std::vector<double> value(per * shells, 0.0);
  parallel_for(per * shells, [&](std::size_t b, std::size_t e, int) {
    PointFn fn = make_fn();
    std::vector<double> p;
    for (std::size_t i = b; i < e; ++i) {
      g.point(i / per, i % per, p);
      double v = std::abs(fn(p));
      if (weight) v /= weight(p);
      value[i] = std::isnan(v) ? kInf : v;
    }
  });
  std::vector<double> sup(shells, 0.0);
  for (std::size_t i = 0; i < value.size(); ++i) sup[i / per] = std::max(sup[i / per], value[i]);
  return sup;
}

std::vector<MultiIndex> check_indices(const EvaluationGrid& g, int deriv_max) {
  std::vector<int> slots;
  for (int i = 0; i < g.sig().n_x; ++i) slots.push_back(g.sig().x_index(i));
  for (int s : g.fiber_slots()) slots.push_back(s);
  return multi_indices(g.sig().arity(), slots, deriv_max);
}

double DecayReport::worst_slope() const {
  double w = -kInf;
  for (const auto& r : rows) w = std::max(w, r.slope);
  return w;
}

bool DecayReport::pass_at(int k) const { return worst_slope() <= -k + slope_tolerance; }

int DecayReport::passed_order() const {
  int best = 0;
  for (int k = 1; k <= k_max; ++k)
    if (pass_at(k)) best = k;
  return best;
}

bool SeminormReport::pass() const {
  for (const auto& r : rows)
    if (!std::isfinite(r.constant) || r.drift > drift_tolerance) return false;
  return true;
}

DecayReport schwartz_check(const SymbolExpr& e, const EvaluationGrid& g, int k_max, int deriv_max,
                           const CheckOptions& opt) {
  require_shells(g);
  if (!(e.sig == g.sig())) throw InvalidParameter("schwartz_check: grid signature mismatch");
  DecayReport rep;
  rep.radii = g.radii();
  rep.k_max = k_max;
  rep.slope_tolerance = opt.slope_tolerance;
  for (const auto& mi : check_indices(g, deriv_max)) {
    Evaluator proto(differentiate(e.expr, mi));
    DecayRow row;
    row.index = mi;
    row.sup = shell_sups(g, [&] {
      return PointFn([ev = proto](std::span<const double> p) mutable { return ev(p); });
    });
    row.slope = fit_tail_slope(rep.radii, row.sup);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

SeminormReport symbol_estimate(const SymbolExpr& e, double m, const Weights& w, const EvaluationGrid& g,
                               int deriv_max, const CheckOptions& opt) {
  require_shells(g);
  if (!(e.sig == g.sig())) throw InvalidParameter("symbol_estimate: grid signature mismatch");
  if (g.span_t()) throw InvalidParameter("symbol_estimate works on xi shells, not (xi, t)");
  SeminormReport rep;
  rep.radii = g.radii();
  rep.m = m;
  rep.drift_tolerance = opt.drift_tolerance;
  QuasiNorm qn{w, NormVariant::Smooth};
  const Signature sig = e.sig;
  std::vector<int> slots;
  for (int i = 0; i < sig.n_x; ++i) slots.push_back(sig.x_index(i));
  for (int k = 0; k < sig.d_xi; ++k) slots.push_back(sig.xi_index(k));
  for (const auto& mi : multi_indices(sig.arity(), slots, deriv_max)) {
    const double power = m - mi.homogeneous_order(sig, w);
    Evaluator proto(differentiate(e.expr, mi));
    SeminormRow row;
    row.index = mi;
    row.ratio = shell_sups(
        g, [&] { return PointFn([ev = proto](std::span<const double> p) mutable { return ev(p); }); },
        [&](std::span<const double> p) {
          double r = qn(p.subspan(sig.xi_index(0), sig.d_xi));
          return std::pow(1.0 + r, power);
        });
    row.constant = *std::max_element(row.ratio.begin(), row.ratio.end());
    row.drift = fit_tail_slope(rep.radii, row.ratio);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

SymbolExpr homogeneity_defect(const SymbolExpr& u, double s, double m, const Weights& w) {
  if (!(s > 0.0)) throw InvalidParameter("homogeneity_defect: s must be positive");
  return {u.sig, compose_dilation(u.expr, u.sig, w, s) - std::pow(s, m) * u.expr};
}

namespace {

// Per-shell sup of |a - b|, where differences below floor times the shell's
// largest |a|, |b| are treated as roundoff. `base` (per shell, optional) is a
// second roundoff scale, taken from the undifferentiated pair.
std::vector<double> paired_sups(const EvaluationGrid& g, const Expr& a, const Expr& b, double floor,
                                const std::vector<double>& base = {}) {
  const std::size_t per = g.points_per_shell();
  const std::size_t shells = g.radii().size();
  std::vector<double> diff(per * shells), scale(per * shells);
  Evaluator e1(a), e2(b);
  parallel_for(per * shells, [&](std::size_t lo, std::size_t hi, int) {
    Evaluator x = e1, y = e2;
    std::vector<double> p;
    for (std::size_t i = lo; i < hi; ++i) {
      g.point(i / per, i % per, p);
      double t1 = x(p), t2 = y(p);
      diff[i] = std::abs(t1 - t2);
      scale[i] = std::max(std::abs(t1), std::abs(t2));
      if (std::isnan(diff[i])) diff[i] = kInf;
    }
  });
  std::vector<double> sup(shells, 0.0);
  for (std::size_t s = 0; s < shells; ++s) {
    double sc = base.empty() ? 0.0 : base[s];
    for (std::size_t k = 0; k < per; ++k) sc = std::max(sc, scale[s * per + k]);
    for (std::size_t k = 0; k < per; ++k) {
      double d = diff[s * per + k];
      if (d > floor * sc) sup[s] = std::max(sup[s], d);
    }
  }
  return sup;
}

// Shell sup of max(|a|, |b|).
std::vector<double> pair_scale(const EvaluationGrid& g, const Expr& a, const Expr& b) {
  Evaluator e1(a), e2(b);
  return shell_sups(g, [&] {
    return PointFn([x = e1, y = e2](std::span<const double> p) mutable { return std::max(std::abs(x(p)), std::abs(y(p))); });
  });
}

// A derivative of weighted order h of something of size F on the shell of
// radius r carries roundoff on the scale F / r^h.
std::vector<double> derivative_scale(const EvaluationGrid& g, const std::vector<double>& base, double h) {
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    double v = base[i] * std::pow(std::max(1.0, g.radii()[i]), -h);
    out[i] = std::isfinite(v) ? v : 0.0;
  }
  return out;
}

}  // namespace

DecayReport schwartz_check_difference(const SymbolExpr& a, const SymbolExpr& b, const EvaluationGrid& g, int k_max,
                                      int deriv_max, const CheckOptions& opt) {
  require_shells(g);
  if (!(a.sig == g.sig()) || !(b.sig == g.sig())) throw InvalidParameter("schwartz_check: grid signature mismatch");
  DecayReport rep;
  rep.radii = g.radii();
  rep.k_max = k_max;
  rep.slope_tolerance = opt.slope_tolerance;
  const auto base = pair_scale(g, a.expr, b.expr);
  for (const auto& mi : check_indices(g, deriv_max)) {
    DecayRow row;
    row.index = mi;
    row.sup = paired_sups(g, differentiate(a.expr, mi), differentiate(b.expr, mi), opt.noise_floor,
                          derivative_scale(g, base, mi.homogeneous_order(a.sig, g.weights())));
    row.slope = fit_tail_slope(rep.radii, row.sup);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

DecayReport hs_check(const SymbolExpr& u, double m, const Weights& w, const EvaluationGrid& g,
                     const std::vector<double>& s_samples, int k_max, int deriv_max, const CheckOptions& opt) {
  require_shells(g);
  if (!(u.sig == g.sig())) throw InvalidParameter("hs_check: grid signature mismatch");
  if (s_samples.empty()) throw InvalidParameter("hs_check: no s samples");
  for (double s : s_samples)
    if (s < 1.0 || s > 2.0) throw InvalidParameter("hs_check: s samples must lie in [1, 2]");
  DecayReport rep;
  rep.radii = g.radii();
  rep.k_max = k_max;
  rep.slope_tolerance = opt.slope_tolerance;
  std::vector<std::vector<double>> base;
  for (double s : s_samples) base.push_back(pair_scale(g, compose_dilation(u.expr, u.sig, w, s), std::pow(s, m) * u.expr));
  for (const auto& mi : check_indices(g, deriv_max)) {
    Expr d = differentiate(u.expr, mi);
    const double hom = mi.homogeneous_order(u.sig, w);
    for (std::size_t si = 0; si < s_samples.size(); ++si) {
      const double s = s_samples[si];
      // d^a (u o delta_s) = s^{|a|} (d^a u) o delta_s
      DecayRow row;
      row.index = mi;
      row.s = s;
      row.sup = paired_sups(g, std::pow(s, hom) * compose_dilation(d, u.sig, w, s), std::pow(s, m) * d,
                            opt.noise_floor, derivative_scale(g, base[si], hom));
      row.slope = fit_tail_slope(rep.radii, row.sup);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

HomogeneityReport homogeneous_check(const SymbolExpr& f, double m, const Weights& w, const EvaluationGrid& g) {
  if (!(f.sig == g.sig())) throw InvalidParameter("homogeneous_check: grid signature mismatch");
  HomogeneityReport rep;
  rep.s_values = {std::sqrt(0.5), std::sqrt(2.0), 2.0, 3.0};
  Evaluator base(f.expr);
  for (double s : rep.s_values) {
    Evaluator dil(compose_dilation(f.expr, f.sig, w, s));
    const double sm = std::pow(s, m);
    auto defect = shell_sups(g, [&] {
      return PointFn([a = dil, b = base, sm](std::span<const double> p) mutable { return a(p) - sm * b(p); });
    });
    auto scale = shell_sups(g, [&] {
      return PointFn([b = base, sm](std::span<const double> p) mutable { return sm * b(p); });
    });
    double worst = 0.0;
    for (std::size_t i = 0; i < defect.size(); ++i) {
      if (defect[i] == 0.0) continue;
      worst = std::max(worst, scale[i] > 0.0 ? defect[i] / scale[i] : kInf);
    }
    rep.violation_per_s.push_back(worst);
    rep.unit_shell_abs.push_back(defect.front());
    rep.violation = std::max(rep.violation, worst);
  }
  return rep;
}

HsDecomposition decompose_hs(const SymbolExpr& u, double m, const Weights& w, double K_radius,
                             const EvaluationGrid& g, double limit_tolerance, int scale_exponent) {
  if (u.sig.has_t) throw UnsupportedError("decompose_hs works on (x, xi) symbols");
  HsDecomposition out;
  auto deg = homogeneous_degree(u.expr, variable_weights(u.sig, w));
  Expr up;
  if (deg && std::abs(*deg - m) < 1e-12) {
    up = u.expr;
    out.on_the_nose = true;
  } else {
    const double s9 = std::ldexp(1.0, scale_exponent - 1), s10 = std::ldexp(1.0, scale_exponent);
    Expr l9 = std::pow(s9, -m) * compose_dilation(u.expr, u.sig, w, s9);
    Expr l10 = std::pow(s10, -m) * compose_dilation(u.expr, u.sig, w, s10);
    Evaluator e9(l9), e10(l10);
    QuasiNorm qn{w, NormVariant::Smooth};
    double change = 0.0, largest = 0.0;
    std::vector<double> p;
    for (std::size_t i = 0; i < g.radii().size(); ++i) {
      if (g.radii()[i] < K_radius) continue;
      for (std::size_t k = 0; k < g.points_per_shell(); ++k) {
        g.point(i, k, p);
        double a = e9(p), b = e10(p);
        double den = std::max(std::abs(a), std::abs(b));
        largest = std::max(largest, den);
        if (den > 0.0) change = std::max(change, std::abs(a - b) / den);
      }
    }
    out.limit_change = change;
    if (change > limit_tolerance)
      throw NonHomogeneousError("scaling limit did not settle: relative change " + std::to_string(change));
    if (largest == 0.0) {
      up = constant(0.0);
      out.vanishing = true;
    } else {
      up = l10;
    }
  }
  out.u_prime = {u.sig, up};
  out.u_dblprime = {u.sig, u.expr - guarded_product(chi_K(u.sig, w, K_radius), up)};
  return out;
}

nlohmann::json to_json(const DecayReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"index", row.index.order},
                    {"s", row.s},
                    {"sup", row.sup},
                    {"slope", std::isfinite(row.slope) ? nlohmann::json(row.slope) : nlohmann::json("-inf")}});
  }
  double ws = r.worst_slope();
  return {{"radii", r.radii},
          {"k_max", r.k_max},
          {"slope_tolerance", r.slope_tolerance},
          {"worst_slope", std::isfinite(ws) ? nlohmann::json(ws) : nlohmann::json("-inf")},
          {"passed_order", r.passed_order()},
          {"pass", r.pass()},
          {"rows", rows}};
}

nlohmann::json to_json(const SeminormReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"index", row.index.order},
                    {"ratio", row.ratio},
                    {"constant", row.constant},
                    {"drift", std::isfinite(row.drift) ? nlohmann::json(row.drift) : nlohmann::json("-inf")}});
  }
  return {{"radii", r.radii}, {"m", r.m}, {"drift_tolerance", r.drift_tolerance}, {"pass", r.pass()}, {"rows", rows}};
}

nlohmann::json to_json(const HomogeneityReport& r) {
  return {{"s", r.s_values},
          {"violation_per_s", r.violation_per_s},
          {"unit_shell_abs", r.unit_shell_abs},
          {"violation", r.violation}};
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::string decay_csv(const DecayReport& r, const Signature& sig) {
  // Rows for several s collapse to the worst case per index.
  std::map<std::vector<int>, DecayRow> worst;
  std::vector<std::vector<int>> order;
  for (const auto& row : r.rows) {
    auto it = worst.find(row.index.order);
    if (it == worst.end()) {
      worst.emplace(row.index.order, row);
      order.push_back(row.index.order);
      continue;
    }
    for (std::size_t i = 0; i < row.sup.size(); ++i) it->second.sup[i] = std::max(it->second.sup[i], row.sup[i]);
    it->second.slope = std::max(it->second.slope, row.slope);
  }
  std::ostringstream os;
  os << "alpha,beta,shell_radius,sup_value,constant,slope\n";
  for (const auto& key : order) {
    const auto& row = worst.at(key);
    double c = *std::max_element(row.sup.begin(), row.sup.end());
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
      os << '"' << part(row.index, 0, sig.n_x) << "\",\"" << part(row.index, sig.n_x, sig.arity()) << "\","
         << fmt(r.radii[i]) << ',' << fmt(row.sup[i]) << ',' << fmt(c) << ',' << fmt(row.slope) << '\n';
    }
  }
  return os.str();
}

std::string seminorm_csv(const SeminormReport& r, const Signature& sig) {
  std::ostringstream os;
  os << "alpha,beta,shell_radius,sup_value,constant,slope\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
      os << '"' << part(row.index, 0, sig.n_x) << "\",\"" << part(row.index, sig.n_x, sig.arity()) << "\","
         << fmt(r.radii[i]) << ',' << fmt(row.ratio[i]) << ',' << fmt(row.constant) << ',' << fmt(row.drift)
         << '\n';
    }
  }
  return os.str();
}

}  // namespace phg
