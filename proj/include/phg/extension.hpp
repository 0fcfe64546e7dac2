#pragma once

// Both directions between polyhomogeneous expansions and extensions that are
// homogeneous modulo Schwartz in (xi, t).

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phg/checks.hpp"
#include "phg/cutoffs.hpp"
#include "phg/symbol.hpp"

namespace phg {

enum class Certificate { OnTheNose, ModuloSchwartz };

struct ExpansionTerm {
  SymbolExpr a;
  double order = 0.0;
  Certificate cert = Certificate::ModuloSchwartz;
};

struct Expansion {
  double m = 0.0;
  Weights weights;
  std::vector<ExpansionTerm> terms;
  /// u_{N+1} for extracted expansions.
  std::optional<SymbolExpr> remainder;
};

/// u(x, xi, t) = sum_k t^{m-k} (weighted-degree-k part of a).
SymbolExpr homogenize_polynomial(const SymbolExpr& a, int m, const Weights& w);

/// chi0(t) a + chi1(t) |t|^m a(x, delta_{1/|t|} xi), using the [1, 2] profile.
/// Requires a passing hs_check report for a at order m.
SymbolExpr make_b(const SymbolExpr& a, double m, const Weights& w, const DecayReport& hs_certificate,
                  TProfile profile = kExtractionProfile);
/// Same construction without the certificate gate. When a is homogeneous of
/// degree m on the nose the two branches agree and b = a.
SymbolExpr make_b_unchecked(const SymbolExpr& a, double m, const Weights& w, TProfile profile = kExtractionProfile);

/// f / t, exact when t is a literal factor. Checks f(x, xi, 0) = 0 on the
/// supplied points (those are full (x, xi, t) points; t is overwritten by 0).
SymbolExpr divide_by_t(const SymbolExpr& f, double t_switch, const std::vector<std::vector<double>>& probe = {});

struct ExtractOptions {
  double t_switch = 1e-3;
  /// Points (x, xi) where the vanishing at t = 0 of each stage is verified.
  std::vector<std::vector<double>> probe;
};

/// a_j = u_j(., ., 0), u_{j+1} = (u_j - b_j) / t for j <= N.
Expansion extract_expansion(const SymbolExpr& u, double m, int N, const Weights& w, const ExtractOptions& opt = {});

/// u_j as an expression, from the terms extracted so far.
SymbolExpr stage_quotient(const SymbolExpr& u, const Expansion& e, int j, double t_switch = 1e-3);

/// |u_j(x, xi, 1) - a(x, xi) + sum_{i<j} a_i(x, xi)| / (1 + |xi|)^m over the grid, maximized over j <= N.
double restriction_residual(const SymbolExpr& u, const Expansion& e, const EvaluationGrid& g);

struct SplitTerm {
  SymbolExpr prime;
  SymbolExpr dblprime;
  bool vanishing = false;
  bool on_the_nose = false;
};

SplitTerm split_term(const SymbolExpr& a, double order, const Weights& w, double K_radius, const EvaluationGrid& g,
                     int scale_exponent = 10, double limit_tolerance = 1e-6);

struct ScheduleRecord {
  int j = 0;
  double initial = 0.0;
  double measured_max = 0.0;
  double epsilon = 0.0;
  /// (gamma, beta, i, constant) entries with |beta| + |gamma| + i <= j.
  std::vector<std::tuple<std::vector<int>, std::vector<int>, int, double>> constants;
};

struct EpsilonSchedule {
  std::vector<double> epsilons;
  std::vector<ScheduleRecord> records;
  std::string grid_description;
};

/// Terms must be homogeneous on the nose. The schedule has max(j_max, #terms) entries.
EpsilonSchedule epsilon_schedule(const Expansion& terms, const EvaluationGrid& g, int j_max, int deriv_max,
                                 const CheckOptions& opt = {});

struct ExtensionResult {
  SymbolExpr b;
  /// t^j b_j, one per term.
  std::vector<SymbolExpr> parts;
  EpsilonSchedule schedule;
  Weights weights;
  std::optional<SymbolExpr> corrected;

  /// Number of terms that can be nonzero at (xi, t): #{j : eps_j |xi| >= tau(t)},
  /// tau = 1/2 for |t| <= 1/2 and |t|/2 beyond.
  int j_max(std::span<const double> xi, double t) const;
  /// b evaluated from the first j_max terms only.
  double evaluate_truncated(std::span<const double> point) const;

 private:
  friend ExtensionResult build_extension(const Expansion&, const EpsilonSchedule&, const CutoffFamily&);
  std::vector<Evaluator> part_eval_;
  std::size_t expansion_terms_ = 0;
};

/// b = sum_j t^j b_j with b_j = chi0(t) a'_j + chi1(t) |t|^{m-j} a'_j(x, delta_{1/|t|} xi),
/// a'_j = phi(delta_{eps_j} xi) a_j, using the [1/2, 1] profile.
ExtensionResult build_extension(const Expansion& terms, const EpsilonSchedule& schedule,
                                const CutoffFamily& cutoffs = {});

/// b = 0 over sig with a t slot; the extension of the empty expansion.
ExtensionResult zero_extension(const Signature& sig, const Weights& w);

/// u = b + l phi~(t) with l = a - b|_{t=1}; refuses when l is not Schwartz.
SymbolExpr correct_restriction(const ExtensionResult& b, const SymbolExpr& a, const EvaluationGrid& g, int k_max,
                               int deriv_max, const CheckOptions& opt = {});

/// Grid over (xi, t) whose outer shells clear the support of every 1 - phi(delta_{eps_j} .).
EvaluationGrid extension_grid(const Signature& sig, const Weights& w, const EpsilonSchedule& s, GridSpec spec = {});

struct RoundTripOptions {
  /// Terms extracted from an extension (a_0..a_N).
  int N = 2;
  int k_max = 4;
  int deriv_max = 2;
  double t_switch = 1e-3;
  double K_radius = 1.0;
  /// Relative shell error allowed when re-extracted terms are compared.
  double term_tolerance = 1e-6;
  GridSpec grid;
  CheckOptions check;
};

struct RoundTripReport {
  /// "extract-rebuild" (from an extension) or "build-extract" (from an expansion).
  std::string direction;
  Expansion expansion;
  EpsilonSchedule schedule;
  /// Schwartz check of (b - u)|_{t=1} (extract-rebuild) or of
  /// (b|_{t=1} - sum a_j) (build-extract).
  DecayReport decay;
  /// max |u_j(., ., 1) - a + sum_{i<j} a_i| / (1 + |xi|)^m, extract-rebuild only.
  double restriction_residual = 0.0;
  /// Per term, max relative shell error of the re-extracted on-the-nose part.
  std::vector<double> term_errors;
  bool pass = false;
};

/// Extension u in HS^m: extract a_0..a_N, keep their on-the-nose parts,
/// rebuild b and check that (b - u)|_{t=1} is Schwartz.
RoundTripReport verify_theorem2(const SymbolExpr& u, double m, const Weights& w, const RoundTripOptions& opt = {});
/// Expansion: build b, restrict to t = 1, re-extract and compare each a_j
/// (after split_term) with the input on the grid shells.
RoundTripReport verify_theorem2(const Expansion& e, const Signature& sig, const RoundTripOptions& opt = {});

nlohmann::json to_json(const Expansion& e);
nlohmann::json to_json(const RoundTripReport& r);
nlohmann::json to_json(const EpsilonSchedule& s);

}  // namespace phg
