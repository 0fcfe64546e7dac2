#pragma once

// Grid verifiers for Schwartz decay, symbol estimates and homogeneity.

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "phg/grid.hpp"
#include "phg/symbol.hpp"

namespace phg {

struct CheckOptions {
  double slope_tolerance = 0.3;
  double drift_tolerance = 0.3;
  /// In paired evaluations |T1 - T2| below noise_floor times the largest
  /// |T1|, |T2| on the same shell is roundoff and counted as 0.
  double noise_floor = 1e-11;
};

struct DecayRow {
  MultiIndex index;
  double s = 1.0;
  std::vector<double> sup;
  double slope = 0.0;
};

struct DecayReport {
  std::vector<double> radii;
  std::vector<DecayRow> rows;
  int k_max = 0;
  double slope_tolerance = 0.3;

  double worst_slope() const;
  bool pass_at(int k) const;
  /// Pass at every order up to k_max.
  bool pass() const { return pass_at(k_max); }
  /// Largest k <= k_max with a pass, 0 if none.
  int passed_order() const;
};

struct SeminormRow {
  MultiIndex index;
  std::vector<double> ratio;  // per shell sup |D a| / (1+|xi|)^{m-|beta|}
  double constant = 0.0;
  double drift = 0.0;
};

struct SeminormReport {
  std::vector<double> radii;
  std::vector<SeminormRow> rows;
  double m = 0.0;
  double drift_tolerance = 0.3;
  bool pass() const;
};

struct HomogeneityReport {
  std::vector<double> s_values;
  std::vector<double> violation_per_s;  // shell-normalized
  std::vector<double> unit_shell_abs;   // max |f(delta_s xi) - s^m f(xi)| on the first shell
  double violation = 0.0;
};

/// Least-squares slope of log(sup) against log(r) over the outer half of the
/// shells. -inf when the outermost value is 0.
double fit_tail_slope(const std::vector<double>& radii, const std::vector<double>& sup);

/// Per-shell sup of |fn| over the grid. make_fn is invoked once per worker.
using PointFn = std::function<double(std::span<const double>)>;
std::vector<double> shell_sups(const EvaluationGrid& g, const std::function<PointFn()>& make_fn,
                               const std::function<double(std::span<const double>)>& weight = nullptr);

/// Multi-indices over the x slots and the grid's fiber slots.
std::vector<MultiIndex> check_indices(const EvaluationGrid& g, int deriv_max);

DecayReport schwartz_check(const SymbolExpr& e, const EvaluationGrid& g, int k_max, int deriv_max,
                           const CheckOptions& opt = {});

/// Schwartz check of a - b, evaluated as a pair so that roundoff in the
/// cancellation is not mistaken for growth.
DecayReport schwartz_check_difference(const SymbolExpr& a, const SymbolExpr& b, const EvaluationGrid& g, int k_max,
                                      int deriv_max, const CheckOptions& opt = {});

SeminormReport symbol_estimate(const SymbolExpr& e, double m, const Weights& w, const EvaluationGrid& g,
                               int deriv_max, const CheckOptions& opt = {});

/// u(x, delta_s xi [, s t]) - s^m u(x, xi [, t]).
SymbolExpr homogeneity_defect(const SymbolExpr& u, double s, double m, const Weights& w);

/// Schwartz check of the homogeneity defect for each s in s_samples.
DecayReport hs_check(const SymbolExpr& u, double m, const Weights& w, const EvaluationGrid& g,
                     const std::vector<double>& s_samples, int k_max, int deriv_max, const CheckOptions& opt = {});

/// Sampled s in {2^{-1/2}, 2^{1/2}, 2, 3}.
HomogeneityReport homogeneous_check(const SymbolExpr& f, double m, const Weights& w, const EvaluationGrid& g);

struct HsDecomposition {
  SymbolExpr u_prime;
  SymbolExpr u_dblprime;
  double limit_change = 0.0;
  bool on_the_nose = false;
  bool vanishing = false;
};

/// u = u' + u'' with u' the scaling limit s^{-m} u(x, delta_s xi)
/// (s = 2^scale_exponent, compared against half of it) and u'' = u - chi_K u'.
HsDecomposition decompose_hs(const SymbolExpr& u, double m, const Weights& w, double K_radius,
                             const EvaluationGrid& g, double limit_tolerance = 1e-6, int scale_exponent = 10);

nlohmann::json to_json(const DecayReport& r);
nlohmann::json to_json(const SeminormReport& r);
nlohmann::json to_json(const HomogeneityReport& r);
/// CSV with columns alpha, beta, shell_radius, sup_value, constant, slope.
std::string decay_csv(const DecayReport& r, const Signature& sig);
std::string seminorm_csv(const SeminormReport& r, const Signature& sig);

}  // namespace phg
