#pragma once

// Smooth cutoffs glued from g(r) = exp(-1/r).

#include "phg/expr.hpp"
#include "phg/grading.hpp"
#include "phg/symbol.hpp"

namespace phg {

/// 0 for r <= a, 1 for r >= b, smooth in between: g(r-a) / (g(r-a) + g(b-r)).
Expr smooth_step(const Expr& r, double a, double b);

/// Plateau/support radii of an even cutoff in t: chi0 = 1 on |t| <= inner,
/// 0 on |t| >= outer; chi1 = 1 - chi0 with the same gluing.
struct TProfile {
  double inner;
  double outer;
};
inline constexpr TProfile kExtractionProfile{1.0, 2.0};
inline constexpr TProfile kExtensionProfile{0.5, 1.0};

Expr chi0(const Expr& t, TProfile p = kExtractionProfile);
Expr chi1(const Expr& t, TProfile p = kExtractionProfile);

/// P(xi) = sum xi_k^{2a/rho_k}, so that the smooth quasi-norm is P^{1/(2a)}.
Expr quasi_norm_power(const Signature& sig, const Weights& w);
Expr quasi_norm_expr(const Signature& sig, const Weights& w, NormVariant v = NormVariant::Smooth);

/// phi(xi): 0 on |xi| <= 1/2, 1 on |xi| >= 1.
Expr phi_cutoff(const Signature& sig, const Weights& w);
/// 0 on the quasi-ball of radius R, 1 outside radius 2R (not compactly supported).
Expr chi_K(const Signature& sig, const Weights& w, double R);
/// Compactly supported in t, identically 1 on [-1, 1].
Expr phi_tilde(const Expr& t);

/// e(x, delta_{1/|t|} xi), valid where t != 0 (callers guard it with chi1).
Expr compose_inverse_t_dilation(const Expr& e, const Signature& sig, const Weights& w);
/// |t|^p written as (t^2)^{p/2}.
Expr abs_t_power(const Expr& t, double p);

/// The cutoff family with its two t-profiles.
struct CutoffFamily {
  TProfile extraction = kExtractionProfile;
  TProfile extension = kExtensionProfile;
};

}  // namespace phg
