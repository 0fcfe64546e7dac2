#include "phg/cutoffs.hpp"

#include <cmath>

#include "phg/errors.hpp"

namespace phg {

namespace {

// lo / (lo + hi) written so that both plateaus are exact: on each one the
// glue that vanishes there guards the quotient, so every derivative is an
// exact 0 rather than the roundoff of hi' / hi - hi hi' / hi^2.
Expr glued_ratio(const Expr& lo, const Expr& hi) { return guard(lo, constant(1.0) - guard(hi, hi / (lo + hi))); }

}  // namespace

Expr smooth_step(const Expr& r, double a, double b) {
  if (!(a < b)) throw InvalidParameter("smooth_step needs a < b");
  return glued_ratio(glue(r - a), glue(b - r));
}

// Both cutoffs work on t^2 so they stay polynomial in t inside the glue.
Expr chi0(const Expr& t, TProfile p) {
  Expr t2 = pow_int(t, 2);
  Expr in = glue(p.outer * p.outer - t2);
  Expr out = glue(t2 - p.inner * p.inner);
  return glued_ratio(in, out);
}

Expr chi1(const Expr& t, TProfile p) {
  Expr t2 = pow_int(t, 2);
  Expr in = glue(p.outer * p.outer - t2);
  Expr out = glue(t2 - p.inner * p.inner);
  return glued_ratio(out, in);
}

Expr quasi_norm_power(const Signature& sig, const Weights& w) {
  const int a = w.lcm();
  std::vector<Expr> terms;
  for (int k = 0; k < sig.d_xi; ++k) terms.push_back(pow_int(xi_var(sig, k), 2 * a / w[k]));
  return add(std::move(terms));
}

Expr quasi_norm_expr(const Signature& sig, const Weights& w, NormVariant v) {
  if (w.d() != sig.d_xi) throw InvalidParameter("weights do not match the xi arity");
  if (v == NormVariant::Smooth) return pow_real(quasi_norm_power(sig, w), 1.0 / (2.0 * w.lcm()));
  std::vector<Expr> terms;
  for (int k = 0; k < sig.d_xi; ++k) terms.push_back(pow_real(abs_of(xi_var(sig, k)), 1.0 / w[k]));
  return add(std::move(terms));
}

Expr phi_cutoff(const Signature& sig, const Weights& w) {
  const double a2 = 2.0 * w.lcm();
  return smooth_step(quasi_norm_power(sig, w), std::pow(0.5, a2), 1.0);
}

Expr chi_K(const Signature& sig, const Weights& w, double R) {
  if (!(R > 0.0)) throw InvalidParameter("chi_K radius must be positive");
  const double a2 = 2.0 * w.lcm();
  return smooth_step(quasi_norm_power(sig, w), std::pow(R, a2), std::pow(2.0 * R, a2));
}

Expr phi_tilde(const Expr& t) { return chi0(t, kExtractionProfile); }

Expr compose_inverse_t_dilation(const Expr& e, const Signature& sig, const Weights& w) {
  Expr t2 = pow_int(t_var(sig), 2);
  std::map<int, Expr> repl;
  for (int k = 0; k < sig.d_xi; ++k) repl[sig.xi_index(k)] = xi_var(sig, k) * pow_real(t2, -0.5 * w[k]);
  return substitute(e, repl);
}

Expr abs_t_power(const Expr& t, double p) { return pow_real(pow_int(t, 2), 0.5 * p); }

}  // namespace phg
