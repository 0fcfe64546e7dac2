#include "phg/symbol.hpp"

#include <cmath>
#include <sstream>

#include "phg/errors.hpp"
#include "phg/parallel.hpp"

namespace phg {

std::string Signature::var_name(int var) const {
  if (var < n_x) return "x" + std::to_string(var + index_base);
  if (var < n_x + d_xi) return "xi" + std::to_string(var - n_x + index_base);
  if (has_t && var == t_index()) return "t";
  return "v" + std::to_string(var);
}

Signature Signature::without_t() const {
  Signature s = *this;
  s.has_t = false;
  return s;
}

Signature Signature::with_t() const {
  Signature s = *this;
  s.has_t = true;
  return s;
}

std::string SymbolExpr::str() const {
  return to_string(expr, [this](int v) { return sig.var_name(v); });
}

Expr x_var(const Signature& sig, int i) {
  if (i < 0 || i >= sig.n_x) throw InvalidParameter("x index out of range");
  return variable(sig.x_index(i));
}

Expr xi_var(const Signature& sig, int k) {
  if (k < 0 || k >= sig.d_xi) throw InvalidParameter("xi index out of range");
  return variable(sig.xi_index(k));
}

Expr t_var(const Signature& sig) {
  if (!sig.has_t) throw InvalidParameter("signature has no t slot");
  return variable(sig.t_index());
}

int MultiIndex::total() const {
  int s = 0;
  for (int o : order) s += o;
  return s;
}

int MultiIndex::homogeneous_order(const Signature& sig, const Weights& w) const {
  int s = 0;
  for (int k = 0; k < sig.d_xi && sig.xi_index(k) < static_cast<int>(order.size()); ++k)
    s += w[k] * order[sig.xi_index(k)];
  if (sig.has_t && sig.t_index() < static_cast<int>(order.size())) s += order[sig.t_index()];
  return s;
}

int MultiIndex::xi_total(const Signature& sig) const {
  int s = 0;
  for (int k = 0; k < sig.d_xi && sig.xi_index(k) < static_cast<int>(order.size()); ++k) s += order[sig.xi_index(k)];
  return s;
}

std::string MultiIndex::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(order[i]);
  }
  return s + ")";
}

std::vector<MultiIndex> multi_indices(int arity, const std::vector<int>& slots, int max_order) {
  std::vector<MultiIndex> out;
  MultiIndex cur{std::vector<int>(arity, 0)};
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
    if (pos == slots.size()) {
      out.push_back(cur);
      return;
    }
    for (int o = 0; o <= left; ++o) {
      cur.order[slots[pos]] = o;
      rec(pos + 1, left - o);
    }
    cur.order[slots[pos]] = 0;
  };
  rec(0, max_order);
  return out;
}

std::vector<double> evaluate(const SymbolExpr& e, const std::vector<std::vector<double>>& pts) {
  for (const auto& p : pts)
    if (static_cast<int>(p.size()) != e.sig.arity()) throw InvalidParameter("evaluate: point arity mismatch");
  std::vector<double> out(pts.size());
  Evaluator proto(e.expr);
  parallel_for(pts.size(), [&](std::size_t b, std::size_t end, int) {
    Evaluator ev = proto;
    for (std::size_t i = b; i < end; ++i) out[i] = ev(pts[i]);
  });
  return out;
}

Expr differentiate(const Expr& e, const MultiIndex& beta) {
  Expr d = e;
  for (std::size_t v = 0; v < beta.order.size(); ++v)
    for (int i = 0; i < beta.order[v]; ++i) d = differentiate(d, static_cast<int>(v));
  return d;
}

SymbolExpr differentiate(const SymbolExpr& e, const MultiIndex& beta) {
  if (static_cast<int>(beta.order.size()) > e.sig.arity())
    throw InvalidParameter("multi-index longer than the signature");
  return {e.sig, differentiate(e.expr, beta)};
}

double fd_derivative(const SymbolExpr& e, const MultiIndex& beta, std::span<const double> pt, double h) {
  if (!(h > 0.0) || h < 1e-150) throw InvalidParameter("fd_derivative: step underflow");
  for (double c : pt)
    if (c + 0.5 * h == c && beta.total() > 0) throw InvalidParameter("fd_derivative: step underflow at this point");
  struct Slot {
    int var;
    int n;
  };
  std::vector<Slot> slots;
  for (std::size_t v = 0; v < beta.order.size(); ++v)
    if (beta.order[v] > 0) slots.push_back({static_cast<int>(v), beta.order[v]});
  Evaluator ev(e.expr);
  std::vector<double> p(pt.begin(), pt.end());
  // Stencil for order n: sum_i (-1)^i C(n,i) f(x + (n/2 - i) h) / h^n.
  std::function<double(std::size_t)> rec = [&](std::size_t s) -> double {
    if (s == slots.size()) return ev(p);
    const auto [var, n] = slots[s];
    const double x0 = p[var];
    double acc = 0.0, binom = 1.0;
    for (int i = 0; i <= n; ++i) {
      p[var] = x0 + (0.5 * n - i) * h;
      acc += (i % 2 ? -binom : binom) * rec(s + 1);
      binom = binom * (n - i) / (i + 1);
    }
    p[var] = x0;
    return acc / std::pow(h, n);
  };
  return rec(0);
}

std::vector<double> variable_weights(const Signature& sig, const Weights& w) {
  if (w.d() != sig.d_xi) throw InvalidParameter("weights do not match the xi arity");
  std::vector<double> out(sig.arity(), 0.0);
  for (int k = 0; k < sig.d_xi; ++k) out[sig.xi_index(k)] = w[k];
  if (sig.has_t) out[sig.t_index()] = 1.0;
  return out;
}

std::optional<double> homogeneous_degree(const Expr& e, const std::vector<double>& vw) {
  const auto& k = e->kids();
  switch (e->op()) {
    case Op::Const: return 0.0;
    case Op::Var: {
      int i = e->integer();
      return i < static_cast<int>(vw.size()) ? vw[i] : 0.0;
    }
    case Op::Add: {
      std::optional<double> deg;
      for (const auto& x : k) {
        auto dx = homogeneous_degree(x, vw);
        if (!dx) return std::nullopt;
        if (deg && std::abs(*deg - *dx) > 1e-12) return std::nullopt;
        deg = dx;
      }
      return deg;
    }
    case Op::Mul: {
      double s = 0.0;
      for (const auto& x : k) {
        auto dx = homogeneous_degree(x, vw);
        if (!dx) return std::nullopt;
        s += *dx;
      }
      return s;
    }
    case Op::PowInt: {
      auto d = homogeneous_degree(k[0], vw);
      if (!d) return std::nullopt;
      return *d * e->integer();
    }
    case Op::PowReal: {
      auto d = homogeneous_degree(k[0], vw);
      if (!d) return std::nullopt;
      return *d * e->real();
    }
    case Op::Exp:
    case Op::Glue: {
      auto d = homogeneous_degree(k[0], vw);
      if (d && *d == 0.0) return 0.0;
      return std::nullopt;
    }
    case Op::Abs: return homogeneous_degree(k[0], vw);
    case Op::Guard: {
      auto dg = homogeneous_degree(k[0], vw);
      if (!dg) return std::nullopt;
      return homogeneous_degree(k[1], vw);
    }
    case Op::DivT: {
      auto d = homogeneous_degree(k[0], vw);
      if (!d) return std::nullopt;
      int t = e->t_index();
      double wt = t < static_cast<int>(vw.size()) ? vw[t] : 0.0;
      return *d - wt * e->integer();
    }
  }
  return std::nullopt;
}

Expr compose_dilation(const Expr& e, const Signature& sig, const Weights& w, double s) {
  if (!(s > 0.0)) throw InvalidParameter("dilation parameter must be positive");
  if (w.d() != sig.d_xi) throw InvalidParameter("weights do not match the xi arity");
  if (s == 1.0) return e;
  std::map<int, Expr> repl;
  for (int k = 0; k < sig.d_xi; ++k) repl[sig.xi_index(k)] = std::pow(s, w[k]) * xi_var(sig, k);
  if (sig.has_t) repl[sig.t_index()] = s * t_var(sig);
  return substitute(e, repl);
}

SymbolExpr restrict_t(const SymbolExpr& e, double value) {
  if (!e.sig.has_t) return e;
  return {e.sig.without_t(), substitute(e.expr, {{e.sig.t_index(), constant(value)}})};
}

}  // namespace phg
