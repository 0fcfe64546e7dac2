#pragma once

// Expression trees for smooth functions of a flat variable vector.
//
// Nodes are immutable and shared; constructors canonicalize (flattened sums
// and products with like terms collected, constants folded) so that exact
// cancellations such as (a + b) - b survive as syntactic zeros. Every node
// carries a structural hash and a bitmask of the variables it depends on.
//
// Primitive set:
//   Const, Var, Add, Mul, PowInt (integer exponent), PowReal (positive base),
//   Exp, Glue (g(r) = exp(-1/r) for r > 0, else 0), Abs,
//   Guard(g, body)   -- 0 wherever g == 0, body elsewhere,
//   DivT(f, k)       -- f / t^k for an f vanishing to order k at t = 0.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace phg {

enum class Op : std::uint8_t { Const, Var, Add, Mul, PowInt, PowReal, Exp, Glue, Abs, Guard, DivT };

class Node;
using Expr = std::shared_ptr<const Node>;

/// Number of Taylor coefficients beyond the leading one kept by DivT nodes
/// for |t| below the switch threshold.
inline constexpr int kDivTTaylorExtra = 2;

class Node {
 public:
  Op op() const noexcept { return op_; }
  /// Const value, PowReal exponent, or DivT switch threshold.
  double real() const noexcept { return real_; }
  /// Var index, PowInt exponent, or DivT order k.
  int integer() const noexcept { return int_; }
  /// DivT only: index of the t variable.
  int t_index() const noexcept { return aux_; }
  const std::vector<Expr>& kids() const noexcept { return kids_; }
  std::uint64_t hash() const noexcept { return hash_; }
  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t var_mask() const noexcept { return mask_; }
  bool depends_on(int var) const noexcept;

  /// DivT only: the expressions c_i = (1/(k+i)!) d^{k+i}f/dt^{k+i} at t = 0,
  /// i = 0..kDivTTaylorExtra. Built on first use.
  const std::vector<Expr>& taylor_coefficients() const;

  Node(Op op, double real, int integer, int aux, std::vector<Expr> kids);

 private:
  Op op_;
  double real_;
  int int_;
  int aux_;
  std::vector<Expr> kids_;
  std::uint64_t hash_;
  std::uint64_t id_;
  std::uint64_t mask_;
  mutable std::once_flag taylor_once_;
  mutable std::vector<Expr> taylor_;
};

// -- construction ----------------------------------------------------------

Expr constant(double value);
Expr variable(int index);
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow_int(const Expr& base, int exponent);
Expr pow_real(const Expr& base, double exponent);
Expr exp_of(const Expr& arg);
Expr glue(const Expr& arg);
Expr abs_of(const Expr& arg);
/// Raw guard node: 0 where `g` evaluates to exactly 0, `body` elsewhere.
/// The caller promises the represented function is smooth and flat on the
/// closure of {g = 0}.
Expr guard(const Expr& g, const Expr& body);
/// guard(g, g * f): the product of a cutoff with a function that may be
/// singular inside the cutoff's zero set.
Expr guarded_product(const Expr& g, const Expr& f);
/// f / t^k. Syntactic factors of t are cancelled exactly; otherwise a DivT
/// node is created which evaluates f / t^k for |t| >= t_switch and a Taylor
/// polynomial built from exact t-derivatives of f below it.
Expr divide_by_t_power(const Expr& f, int k, int t_index, double t_switch);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);

// -- inspection ------------------------------------------------------------

bool is_constant(const Expr& e, double* value = nullptr);
bool is_zero(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);
std::size_t node_count(const Expr& e);
bool contains_op(const Expr& e, Op op);

// -- calculus --------------------------------------------------------------

/// Exact partial derivative. Results are cached per (node, variable).
Expr differentiate(const Expr& e, int var);
/// Replace variables by expressions, rebuilding through the canonicalizing
/// constructors.
Expr substitute(const Expr& e, const std::map<int, Expr>& replacement);

/// Drops the process-wide derivative cache.
void clear_derivative_cache();

// -- printing --------------------------------------------------------------

using VarNamer = std::function<std::string(int)>;
std::string to_string(const Expr& e, const VarNamer& namer);
std::string to_string(const Expr& e);

// -- evaluation ------------------------------------------------------------

/// Compiled evaluator for one expression. Holds scratch space, so a single
/// instance must not be shared between threads; copies are independent.
class Evaluator {
 public:
  Evaluator() = default;
  explicit Evaluator(const Expr& e);

  /// Throws DomainError when a node is evaluated outside its smoothness domain.
  double operator()(std::span<const double> point) const;
  bool empty() const noexcept { return prog_.empty(); }

 private:
  struct Instr {
    Op op;
    double real;
    int integer;
    int aux;
    std::vector<int> kids;
    std::vector<std::pair<int, int>> den;  // Mul only: (base slot, |exponent|)
    const Node* node;
  };
  double eval(int i) const;

  std::vector<Instr> prog_;
  int root_ = -1;
  Expr keep_;
  mutable std::vector<double> value_;
  mutable std::vector<std::uint32_t> stamp_;
  mutable std::uint32_t epoch_ = 0;
  mutable const double* point_ = nullptr;
  mutable std::size_t point_size_ = 0;
};

}  // namespace phg
