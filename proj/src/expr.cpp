#include "phg/expr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "phg/errors.hpp"

namespace phg {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_double(double v) {
  if (v == 0.0) v = 0.0;  // fold -0
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(v));
  return mix(bits);
}

std::atomic<std::uint64_t> g_next_id{1};

std::uint64_t var_bit(int index) {
  return index >= 0 && index < 64 ? (std::uint64_t{1} << index) : ~std::uint64_t{0};
}

Expr make(Op op, double real, int integer, int aux, std::vector<Expr> kids) {
  return std::make_shared<const Node>(op, real, integer, aux, std::move(kids));
}

bool less_by_hash(const Expr& a, const Expr& b) {
  if (a->hash() != b->hash()) return a->hash() < b->hash();
  return a->op() < b->op();
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

Node::Node(Op op, double real, int integer, int aux, std::vector<Expr> kids)
    : op_(op), real_(real), int_(integer), aux_(aux), kids_(std::move(kids)) {
  std::uint64_t h = mix(static_cast<std::uint64_t>(op) + 0x51);
  switch (op) {
    case Op::Const: h = mix(h ^ hash_double(real)); break;
    case Op::Var: h = mix(h ^ static_cast<std::uint64_t>(integer + 1000)); break;
    case Op::PowInt: h = mix(h ^ static_cast<std::uint64_t>(integer + 7919)); break;
    case Op::PowReal: h = mix(h ^ hash_double(real)); break;
    case Op::DivT:
      h = mix(h ^ static_cast<std::uint64_t>(integer * 131 + aux));
      h = mix(h ^ hash_double(real));
      break;
    default: break;
  }
  std::uint64_t m = 0;
  for (const auto& k : kids_) {
    h = mix(h ^ k->hash());
    m |= k->var_mask();
  }
  if (op == Op::Var) m = var_bit(integer);
  if (op == Op::DivT) m |= var_bit(aux);
  hash_ = h;
  mask_ = m;
  id_ = g_next_id.fetch_add(1, std::memory_order_relaxed);
}

bool Node::depends_on(int var) const noexcept { return (mask_ & var_bit(var)) != 0; }

const std::vector<Expr>& Node::taylor_coefficients() const {
  if (op_ != Op::DivT) throw UnsupportedError("taylor_coefficients on a non-DivT node");
  std::call_once(taylor_once_, [this] {
    const Expr& f = kids_[0];
    std::map<int, Expr> at_zero{{aux_, constant(0.0)}};
    Expr d = f;
    for (int i = 0; i < int_; ++i) d = differentiate(d, aux_);
    std::vector<Expr> out;
    for (int i = 0; i <= kDivTTaylorExtra; ++i) {
      if (i > 0) d = differentiate(d, aux_);
      out.push_back(substitute(d, at_zero) * (1.0 / factorial(int_ + i)));
    }
    taylor_ = std::move(out);
  });
  return taylor_;
}

// -- inspection ------------------------------------------------------------

bool is_constant(const Expr& e, double* value) {
  if (e->op() != Op::Const) return false;
  if (value) *value = e->real();
  return true;
}

bool is_zero(const Expr& e) { return e->op() == Op::Const && e->real() == 0.0; }

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (a->hash() != b->hash() || a->op() != b->op()) return false;
  if (a->integer() != b->integer() || a->t_index() != b->t_index()) return false;
  if (a->real() != b->real()) return false;
  if (a->kids().size() != b->kids().size()) return false;
  for (std::size_t i = 0; i < a->kids().size(); ++i)
    if (!structurally_equal(a->kids()[i], b->kids()[i])) return false;
  return true;
}

std::size_t node_count(const Expr& e) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const auto& k : n->kids()) stack.push_back(k.get());
  }
  return seen.size();
}

bool contains_op(const Expr& e, Op op) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{e.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->op() == op) return true;
    if (!seen.insert(n).second) continue;
    for (const auto& k : n->kids()) stack.push_back(k.get());
  }
  return false;
}

// -- construction ----------------------------------------------------------

Expr constant(double value) {
  if (!std::isfinite(value)) throw DomainError("non-finite constant");
  if (value == 0.0) value = 0.0;
  return make(Op::Const, value, 0, 0, {});
}

Expr variable(int index) {
  if (index < 0) throw InvalidParameter("negative variable index");
  return make(Op::Var, 0.0, index, 0, {});
}

namespace {

// Collects (expression, multiplier) pairs keyed by structure.
struct Collector {
  std::vector<std::pair<Expr, double>> items;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;

  void put(const Expr& e, double c) {
    auto& bucket = index[e->hash()];
    for (std::size_t i : bucket) {
      if (structurally_equal(items[i].first, e)) {
        items[i].second += c;
        return;
      }
    }
    bucket.push_back(items.size());
    items.emplace_back(e, c);
  }
};

void collect_terms(const Expr& e, double scale, Collector& acc, double& konst) {
  switch (e->op()) {
    case Op::Const: konst += scale * e->real(); return;
    case Op::Add:
      for (const auto& k : e->kids()) collect_terms(k, scale, acc, konst);
      return;
    case Op::Mul:
      if (e->kids()[0]->op() == Op::Const) {
        double c = e->kids()[0]->real();
        std::vector<Expr> rest(e->kids().begin() + 1, e->kids().end());
        Expr r = rest.size() == 1 ? rest[0] : make(Op::Mul, 0.0, 0, 0, std::move(rest));
        if (r->op() == Op::Add) {
          collect_terms(r, scale * c, acc, konst);
        } else {
          acc.put(r, scale * c);
        }
        return;
      }
      acc.put(e, scale);
      return;
    default: acc.put(e, scale); return;
  }
}

// Builds c * r where r is a canonical non-constant, non-Add expression.
Expr scaled_term(double c, const Expr& r) {
  if (c == 1.0) return r;
  std::vector<Expr> kids{constant(c)};
  if (r->op() == Op::Mul) {
    kids.insert(kids.end(), r->kids().begin(), r->kids().end());
  } else {
    kids.push_back(r);
  }
  return make(Op::Mul, 0.0, 0, 0, std::move(kids));
}

Expr raw_pow_int(const Expr& b, int n) {
  if (n == 1) return b;
  return make(Op::PowInt, 0.0, n, 0, {b});
}

}  // namespace

Expr add(std::vector<Expr> terms) {
  Collector acc;
  double konst = 0.0;
  for (const auto& t : terms) collect_terms(t, 1.0, acc, konst);
  std::vector<Expr> out;
  for (auto& [r, c] : acc.items) {
    if (c == 0.0) continue;
    out.push_back(scaled_term(c, r));
  }
  if (out.empty()) return constant(konst);
  if (out.size() == 1 && konst == 0.0) return out[0];
  std::sort(out.begin(), out.end(), less_by_hash);
  if (konst != 0.0) out.insert(out.begin(), constant(konst));
  return make(Op::Add, 0.0, 0, 0, std::move(out));
}

namespace {

void collect_factors(const Expr& e, int power, Collector& acc, double& coef) {
  switch (e->op()) {
    case Op::Const: {
      double v = std::pow(e->real(), power);
      if (power < 0 && e->real() == 0.0) throw DomainError("division by the constant 0");
      coef *= v;
      return;
    }
    case Op::Mul:
      for (const auto& k : e->kids()) collect_factors(k, power, acc, coef);
      return;
    case Op::PowInt: acc.put(e->kids()[0], static_cast<double>(power) * e->integer()); return;
    default: acc.put(e, power); return;
  }
}

}  // namespace

Expr mul(std::vector<Expr> factors) {
  Collector acc;
  double coef = 1.0;
  for (const auto& f : factors) collect_factors(f, 1, acc, coef);
  if (coef == 0.0) return constant(0.0);
  std::vector<Expr> out;
  for (auto& [b, n] : acc.items) {
    int k = static_cast<int>(n);
    if (k == 0) continue;
    out.push_back(raw_pow_int(b, k));
  }
  if (out.empty()) return constant(coef);
  if (out.size() == 1) {
    if (coef == 1.0) return out[0];
    if (out[0]->op() == Op::Add) {
      std::vector<Expr> scaled;
      for (const auto& t : out[0]->kids()) scaled.push_back(coef * t);
      return add(std::move(scaled));
    }
  }
  std::sort(out.begin(), out.end(), less_by_hash);
  if (coef != 1.0) out.insert(out.begin(), constant(coef));
  return make(Op::Mul, 0.0, 0, 0, std::move(out));
}

Expr pow_int(const Expr& base, int n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return base;
  switch (base->op()) {
    case Op::Const:
      if (base->real() == 0.0 && n < 0) throw DomainError("negative power of the constant 0");
      return constant(std::pow(base->real(), n));
    case Op::PowInt: return pow_int(base->kids()[0], base->integer() * n);
    case Op::PowReal: return pow_real(base->kids()[0], base->real() * n);
    case Op::Mul: {
      std::vector<Expr> f;
      for (const auto& k : base->kids()) f.push_back(pow_int(k, n));
      return mul(std::move(f));
    }
    default: return raw_pow_int(base, n);
  }
}

Expr pow_real(const Expr& base, double p) {
  if (p == 0.0) return constant(1.0);
  if (p == std::round(p) && std::abs(p) < 1e6) return pow_int(base, static_cast<int>(p));
  switch (base->op()) {
    case Op::Const: {
      double b = base->real();
      if (b > 0.0) return constant(std::pow(b, p));
      if (b == 0.0 && p > 0.0) return constant(0.0);
      throw DomainError("real power of a non-positive constant");
    }
    case Op::PowReal: return pow_real(base->kids()[0], base->real() * p);
    default: return make(Op::PowReal, p, 0, 0, {base});
  }
}

Expr exp_of(const Expr& arg) {
  if (arg->op() == Op::Const) return constant(std::exp(arg->real()));
  return make(Op::Exp, 0.0, 0, 0, {arg});
}

Expr glue(const Expr& arg) {
  if (arg->op() == Op::Const) {
    double r = arg->real();
    return constant(r > 0.0 ? std::exp(-1.0 / r) : 0.0);
  }
  return make(Op::Glue, 0.0, 0, 0, {arg});
}

Expr abs_of(const Expr& arg) {
  switch (arg->op()) {
    case Op::Const: return constant(std::abs(arg->real()));
    case Op::Abs:
    case Op::Exp:
    case Op::Glue:
    case Op::PowReal: return arg;
    case Op::PowInt:
      if (arg->integer() % 2 == 0) return arg;
      break;
    default: break;
  }
  return make(Op::Abs, 0.0, 0, 0, {arg});
}

Expr guard(const Expr& g, const Expr& body) {
  if (g->op() == Op::Const) return g->real() == 0.0 ? constant(0.0) : body;
  if (is_zero(body)) return body;
  if (body->op() == Op::Guard && structurally_equal(body->kids()[0], g)) return body;
  return make(Op::Guard, 0.0, 0, 0, {g, body});
}

Expr guarded_product(const Expr& g, const Expr& f) { return guard(g, g * f); }

namespace {

bool is_t_power(const Expr& e, int t, int* power) {
  if (e->op() == Op::Var && e->integer() == t) {
    *power = 1;
    return true;
  }
  if (e->op() == Op::PowInt && e->integer() > 0 && e->kids()[0]->op() == Op::Var &&
      e->kids()[0]->integer() == t) {
    *power = e->integer();
    return true;
  }
  return false;
}

// f / t^k when t^k divides f syntactically.
std::optional<Expr> exact_quotient(const Expr& f, int k, int t) {
  if (is_zero(f)) return f;
  if (!f->depends_on(t)) return std::nullopt;
  int p = 0;
  if (is_t_power(f, t, &p)) {
    if (p >= k) return pow_int(variable(t), p - k);
    return std::nullopt;
  }
  if (f->op() == Op::Mul) {
    int total = 0;
    std::vector<Expr> rest;
    for (const auto& x : f->kids()) {
      if (is_t_power(x, t, &p)) {
        total += p;
      } else {
        rest.push_back(x);
      }
    }
    if (total >= k) {
      rest.push_back(pow_int(variable(t), total - k));
      return mul(std::move(rest));
    }
    return std::nullopt;
  }
  if (f->op() == Op::Add) {
    std::vector<Expr> q;
    for (const auto& x : f->kids()) {
      auto r = exact_quotient(x, k, t);
      if (!r) return std::nullopt;
      q.push_back(*r);
    }
    return add(std::move(q));
  }
  return std::nullopt;
}

}  // namespace

Expr divide_by_t_power(const Expr& f, int k, int t, double t_switch) {
  if (k < 0) throw InvalidParameter("negative order in divide_by_t_power");
  if (!(t_switch > 0.0)) throw InvalidParameter("t_switch must be positive");
  if (k == 0) return f;
  if (auto q = exact_quotient(f, k, t)) return *q;
  if (!f->depends_on(t)) throw NotInI0Error("expression does not depend on t and is not zero");
  if (f->op() == Op::DivT && f->t_index() == t)
    return make(Op::DivT, std::min(t_switch, f->real()), f->integer() + k, t, {f->kids()[0]});
  return make(Op::DivT, t_switch, k, t, {f});
}

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({constant(-1.0), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow_int(b, -1)}); }
Expr operator-(const Expr& a) { return mul({constant(-1.0), a}); }
Expr operator+(const Expr& a, double b) { return a + constant(b); }
Expr operator+(double a, const Expr& b) { return constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - constant(b); }
Expr operator-(double a, const Expr& b) { return constant(a) - b; }
Expr operator*(const Expr& a, double b) { return a * constant(b); }
Expr operator*(double a, const Expr& b) { return constant(a) * b; }

// -- differentiation -------------------------------------------------------

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, int>& p) const {
    return static_cast<std::size_t>(mix(p.first * 131 + static_cast<std::uint64_t>(p.second)));
  }
};

std::mutex g_diff_mutex;
// The cache keeps the source node alive so its id cannot be reused.
std::unordered_map<std::pair<std::uint64_t, int>, std::pair<Expr, Expr>, PairHash> g_diff_cache;

Expr diff_uncached(const Expr& e, int v);

}  // namespace

Expr differentiate(const Expr& e, int v) {
  if (!e->depends_on(v)) return constant(0.0);
  if (e->op() == Op::Var) return constant(1.0);
  auto key = std::make_pair(e->id(), v);
  {
    std::lock_guard<std::mutex> lock(g_diff_mutex);
    auto it = g_diff_cache.find(key);
    if (it != g_diff_cache.end()) return it->second.second;
  }
  Expr d = diff_uncached(e, v);
  std::lock_guard<std::mutex> lock(g_diff_mutex);
  g_diff_cache.emplace(key, std::make_pair(e, d));
  return d;
}

void clear_derivative_cache() {
  std::lock_guard<std::mutex> lock(g_diff_mutex);
  g_diff_cache.clear();
}

namespace {

Expr diff_uncached(const Expr& e, int v) {
  const auto& k = e->kids();
  switch (e->op()) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(e->integer() == v ? 1.0 : 0.0);
    case Op::Add: {
      std::vector<Expr> d;
      for (const auto& x : k) d.push_back(differentiate(x, v));
      return add(std::move(d));
    }
    case Op::Mul: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (!k[i]->depends_on(v)) continue;
        std::vector<Expr> f(k.begin(), k.end());
        f[i] = differentiate(k[i], v);
        terms.push_back(mul(std::move(f)));
      }
      return add(std::move(terms));
    }
    case Op::PowInt: {
      int n = e->integer();
      return mul({constant(n), pow_int(k[0], n - 1), differentiate(k[0], v)});
    }
    case Op::PowReal: {
      double p = e->real();
      return mul({constant(p), pow_real(k[0], p - 1.0), differentiate(k[0], v)});
    }
    case Op::Exp: return mul({e, differentiate(k[0], v)});
    case Op::Glue: {
      // g'(r) = g(r) / r^2, flat at r = 0 from the right.
      Expr inner = guard(e, e * pow_int(k[0], -2));
      return inner * differentiate(k[0], v);
    }
    case Op::Abs: return mul({k[0], pow_int(e, -1), differentiate(k[0], v)});
    case Op::Guard: return guard(k[0], differentiate(k[1], v));
    case Op::DivT: {
      int t = e->t_index();
      int ord = e->integer();
      const Expr& f = k[0];
      if (v != t) return divide_by_t_power(differentiate(f, v), ord, t, e->real());
      Expr num = variable(t) * differentiate(f, t) - constant(ord) * f;
      return divide_by_t_power(num, ord + 1, t, e->real());
    }
  }
  throw UnsupportedError("unknown node");
}

}  // namespace

// -- substitution ----------------------------------------------------------

namespace {

struct Substituter {
  const std::map<int, Expr>& repl;
  std::uint64_t repl_mask = 0;
  std::unordered_map<const Node*, Expr> memo;

  Expr run(const Expr& e) {
    if ((e->var_mask() & repl_mask) == 0) return e;
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    Expr r = build(e);
    memo.emplace(e.get(), r);
    return r;
  }

  std::vector<Expr> kids(const Expr& e) {
    std::vector<Expr> out;
    for (const auto& k : e->kids()) out.push_back(run(k));
    return out;
  }

  Expr build(const Expr& e) {
    switch (e->op()) {
      case Op::Const: return e;
      case Op::Var: {
        auto it = repl.find(e->integer());
        return it == repl.end() ? e : it->second;
      }
      case Op::Add: return add(kids(e));
      case Op::Mul: return mul(kids(e));
      case Op::PowInt: return pow_int(run(e->kids()[0]), e->integer());
      case Op::PowReal: return pow_real(run(e->kids()[0]), e->real());
      case Op::Exp: return exp_of(run(e->kids()[0]));
      case Op::Glue: return glue(run(e->kids()[0]));
      case Op::Abs: return abs_of(run(e->kids()[0]));
      case Op::Guard: {
        Expr g = run(e->kids()[0]);
        if (g->op() == Op::Const && g->real() == 0.0) return constant(0.0);
        return guard(g, run(e->kids()[1]));
      }
      case Op::DivT: return build_divt(e);
    }
    throw UnsupportedError("unknown node");
  }

  Expr build_divt(const Expr& e) {
    const int t = e->t_index();
    const int k = e->integer();
    const double ts = e->real();
    const Expr& f = e->kids()[0];
    for (const auto& [var, r] : repl) {
      if (var != t && f->depends_on(var) && r->depends_on(t))
        throw UnsupportedError("substitution mixes t into other variables under a t-division");
    }
    auto it = repl.find(t);
    if (it == repl.end() || (it->second->op() == Op::Var && it->second->integer() == t))
      return divide_by_t_power(run(f), k, t, ts);
    const Expr& r = it->second;
    double tau = 0.0;
    if (is_constant(r, &tau)) {
      if (std::abs(tau) < ts) {
        const auto& c = e->taylor_coefficients();
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < c.size(); ++i) terms.push_back(run(c[i]) * std::pow(tau, static_cast<int>(i)));
        return add(std::move(terms));
      }
      return run(f) * std::pow(tau, -k);
    }
    // t -> c * t
    if (r->op() == Op::Mul && r->kids().size() == 2 && r->kids()[0]->op() == Op::Const &&
        r->kids()[1]->op() == Op::Var && r->kids()[1]->integer() == t) {
      double c = r->kids()[0]->real();
      return std::pow(c, -k) * divide_by_t_power(run(f), k, t, ts / std::abs(c));
    }
    throw UnsupportedError("substitution for t under a t-division must be a constant or c*t");
  }
};

}  // namespace

Expr substitute(const Expr& e, const std::map<int, Expr>& replacement) {
  if (replacement.empty()) return e;
  Substituter s{replacement, 0, {}};
  for (const auto& [v, r] : replacement) s.repl_mask |= var_bit(v);
  return s.run(e);
}

// -- printing --------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void print(std::ostream& os, const Expr& e, const VarNamer& namer) {
  const auto& k = e->kids();
  auto list = [&](const char* head) {
    os << '(' << head;
    for (const auto& x : k) {
      os << ' ';
      print(os, x, namer);
    }
    os << ')';
  };
  switch (e->op()) {
    case Op::Const: os << fmt_double(e->real()); return;
    case Op::Var: os << namer(e->integer()); return;
    case Op::Add: list("+"); return;
    case Op::Mul: list("*"); return;
    case Op::PowInt:
      os << "(^ ";
      print(os, k[0], namer);
      os << ' ' << e->integer() << ')';
      return;
    case Op::PowReal:
      os << "(pow ";
      print(os, k[0], namer);
      os << ' ' << fmt_double(e->real()) << ')';
      return;
    case Op::Exp: list("exp"); return;
    case Op::Glue: list("glue"); return;
    case Op::Abs: list("abs"); return;
    case Op::Guard: list("guard"); return;
    case Op::DivT:
      os << "(divt " << e->integer() << ' ' << fmt_double(e->real()) << ' ';
      print(os, k[0], namer);
      os << ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e, const VarNamer& namer) {
  std::ostringstream os;
  print(os, e, namer);
  return os.str();
}

std::string to_string(const Expr& e) {
  return to_string(e, [](int i) { return "v" + std::to_string(i); });
}

// -- evaluation ------------------------------------------------------------

Evaluator::Evaluator(const Expr& e) : keep_(e) {
  std::unordered_map<const Node*, int> slot;
  // Iterative post-order so deep trees do not overflow the stack.
  std::vector<std::pair<const Node*, bool>> stack{{e.get(), false}};
  std::vector<Expr> extra_roots;
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (slot.count(n)) continue;
    std::vector<const Node*> children;
    for (const auto& k : n->kids()) children.push_back(k.get());
    if (n->op() == Op::DivT)
      for (const auto& c : n->taylor_coefficients()) children.push_back(c.get());
    if (!expanded) {
      stack.push_back({n, true});
      for (const Node* c : children)
        if (!slot.count(c)) stack.push_back({c, false});
      continue;
    }
    Instr in{n->op(), n->real(), n->integer(), n->t_index(), {}, {}, n};
    for (const Node* c : children) {
      if (n->op() == Op::Mul && c->op() == Op::PowInt && c->integer() < 0) {
        in.den.emplace_back(slot.at(c->kids()[0].get()), -c->integer());
      } else {
        in.kids.push_back(slot.at(c));
      }
    }
    slot[n] = static_cast<int>(prog_.size());
    prog_.push_back(std::move(in));
  }
  root_ = slot.at(e.get());
  value_.assign(prog_.size(), 0.0);
  stamp_.assign(prog_.size(), 0);
}

double Evaluator::operator()(std::span<const double> point) const {
  if (prog_.empty()) throw InvalidParameter("empty evaluator");
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  point_ = point.data();
  point_size_ = point.size();
  return eval(root_);
}

double Evaluator::eval(int i) const {
  if (stamp_[i] == epoch_) return value_[i];
  const Instr& in = prog_[i];
  double r = 0.0;
  switch (in.op) {
    case Op::Const: r = in.real; break;
    case Op::Var:
      if (static_cast<std::size_t>(in.integer) >= point_size_)
        throw InvalidParameter("evaluation point too short for variable " + std::to_string(in.integer));
      r = point_[in.integer];
      break;
    case Op::Add:
      for (int k : in.kids) r += eval(k);
      break;
    case Op::Mul: {
      // Negative powers divide, so g / g is exactly 1 on cutoff plateaus.
      r = 1.0;
      for (int k : in.kids) r *= eval(k);
      if (!in.den.empty()) {
        double den = 1.0;
        for (auto [b, n] : in.den) den *= std::pow(eval(b), n);
        if (den == 0.0) throw DomainError("division by 0 in " + to_string(keep_));
        r /= den;
      }
      break;
    }
    case Op::PowInt: {
      double b = eval(in.kids[0]);
      if (b == 0.0 && in.integer < 0) throw DomainError("negative power of 0 in " + to_string(keep_));
      r = std::pow(b, in.integer);
      break;
    }
    case Op::PowReal: {
      double b = eval(in.kids[0]);
      if (b < 0.0 || (b == 0.0 && in.real < 0.0))
        throw DomainError("real power outside its domain (base " + fmt_double(b) + ")");
      r = std::pow(b, in.real);
      break;
    }
    case Op::Exp: r = std::exp(eval(in.kids[0])); break;
    case Op::Glue: {
      double a = eval(in.kids[0]);
      r = a > 0.0 ? std::exp(-1.0 / a) : 0.0;
      break;
    }
    case Op::Abs: r = std::abs(eval(in.kids[0])); break;
    case Op::Guard: {
      double g = eval(in.kids[0]);
      r = g == 0.0 ? 0.0 : eval(in.kids[1]);
      break;
    }
    case Op::DivT: {
      if (static_cast<std::size_t>(in.aux) >= point_size_)
        throw InvalidParameter("evaluation point too short for t");
      double t = point_[in.aux];
      if (std::abs(t) >= in.real) {
        r = eval(in.kids[0]) / std::pow(t, in.integer);
      } else {
        double tp = 1.0;
        for (std::size_t j = 1; j < in.kids.size(); ++j) {
          r += eval(in.kids[j]) * tp;
          tp *= t;
        }
      }
      break;
    }
  }
  value_[i] = r;
  stamp_[i] = epoch_;
  return r;
}

}  // namespace phg
