#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phg/expr.hpp"
#include "phg/grading.hpp"

namespace phg {

/// Variable layout of a symbol: x_1..x_n, then xi_1..xi_d, then optionally t.
/// With index_base 0 the printed names start at x0 / xi0 (Heisenberg coordinates).
struct Signature {
  int n_x = 0;
  int d_xi = 0;
  bool has_t = false;
  int index_base = 1;

  int x_index(int i) const { return i; }
  int xi_index(int k) const { return n_x + k; }
  int t_index() const { return n_x + d_xi; }
  int arity() const { return n_x + d_xi + (has_t ? 1 : 0); }
  std::string var_name(int var) const;
  Signature without_t() const;
  Signature with_t() const;
  bool operator==(const Signature& o) const {
    return n_x == o.n_x && d_xi == o.d_xi && has_t == o.has_t && index_base == o.index_base;
  }
};

struct SymbolExpr {
  Signature sig;
  Expr expr;

  std::string str() const;
};

Expr x_var(const Signature& sig, int i);
Expr xi_var(const Signature& sig, int k);
Expr t_var(const Signature& sig);

/// Derivative orders per variable slot, in signature order.
struct MultiIndex {
  std::vector<int> order;

  int total() const;
  /// sum rho_k beta_k over the xi slots (plus the t order with weight 1).
  int homogeneous_order(const Signature& sig, const Weights& w) const;
  int xi_total(const Signature& sig) const;
  std::string str() const;
};

/// Every multi-index over the listed variable slots with total order <= max_order.
std::vector<MultiIndex> multi_indices(int arity, const std::vector<int>& slots, int max_order);

std::vector<double> evaluate(const SymbolExpr& e, const std::vector<std::vector<double>>& pts);
SymbolExpr differentiate(const SymbolExpr& e, const MultiIndex& beta);
Expr differentiate(const Expr& e, const MultiIndex& beta);

/// Tensor central difference, O(h^2) in every slot.
double fd_derivative(const SymbolExpr& e, const MultiIndex& beta, std::span<const double> pt, double h);

/// Weights of each variable for the graded dilation: 0 on x, rho on xi, 1 on t.
std::vector<double> variable_weights(const Signature& sig, const Weights& w);

/// Degree d such that e(delta~_s .) = s^d e(.) holds syntactically (each
/// subexpression is itself homogeneous), or nullopt when that cannot be
/// certified from the tree.
std::optional<double> homogeneous_degree(const Expr& e, const std::vector<double>& var_weight);

/// e(x, delta_s xi [, s t]).
Expr compose_dilation(const Expr& e, const Signature& sig, const Weights& w, double s);

/// Substitute t = value and drop the t slot from the signature.
SymbolExpr restrict_t(const SymbolExpr& e, double value);

}  // namespace phg
