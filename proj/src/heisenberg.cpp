#include "phg/heisenberg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "phg/errors.hpp"
#include "phg/parallel.hpp"

namespace phg {

namespace {

void require_dim(const HeisenbergModel& M, const Vec& v, const char* what) {
  if (v.size() != M.dim()) throw InvalidParameter(std::string(what) + ": expected " + std::to_string(M.dim()) + " coordinates");
}

// c_j(x) as expressions over the space variables.
std::vector<Expr> c_exprs(const HeisenbergModel& M) {
  std::vector<Expr> c(M.dim(), constant(0.0));
  for (int j = 1; j <= M.d; ++j) {
    std::vector<Expr> terms;
    for (int k = 1; k <= M.d; ++k)
      if (M.b(j, k) != 0.0) terms.push_back((0.5 * M.b(j, k)) * variable(k));
    c[j] = add(std::move(terms));
  }
  return c;
}

// Samples of e over the x or xi coordinates of g, placed after `prefix` and
// before `suffix` in the evaluation point.
CVec sample(const Expr& e, const BoxGrid& g, bool on_xi, const std::vector<double>& prefix,
            const std::vector<double>& suffix) {
  CVec out(g.total());
  Evaluator proto(e);
  parallel_for(g.total(), [&](std::size_t b, std::size_t en, int) {
    Evaluator ev = proto;
    std::vector<double> p(prefix.size() + g.dim() + suffix.size());
    std::copy(prefix.begin(), prefix.end(), p.begin());
    std::copy(suffix.begin(), suffix.end(), p.begin() + prefix.size() + g.dim());
    std::vector<int> idx;
    for (std::size_t f = b; f < en; ++f) {
      g.unflatten(f, idx);
      for (int a = 0; a < g.dim(); ++a) p[prefix.size() + a] = on_xi ? g.xi(a, idx[a]) : g.x(a, idx[a]);
      out[f] = ev(p);
    }
  });
  return out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double rel_dev(const CVec& got, const CVec& want) {
  double num = 0.0, den = max_abs(want);
  for (std::size_t i = 0; i < got.size(); ++i) num = std::max(num, std::abs(got[i] - want[i]));
  if (den == 0.0) return num;
  return num / den;
}

KernelGrid shear(const HeisenbergModel& M, const KernelGrid& K, double sign, double tail_tolerance) {
  if (K.domain != "v") throw InvalidParameter("chart push-forward needs a kernel in the (y, v) form");
  const BoxGrid& g = K.grid;
  if (g.dim() != M.dim()) throw InvalidParameter("kernel grid dimension does not match the model");
  KernelGrid out = K;
  for (std::size_t s = 0; s < K.base.size(); ++s) {
    Vec c = M.c(K.base[s]);
    if (c.isZero(0.0)) continue;
    auto shift = [&](const std::vector<int>& idx) {
      double a = 0.0;
      for (int j = 1; j <= M.d; ++j) a += c[j] * g.x(j, idx[j]);
      return sign * a;
    };
    // L1 mass of the samples that the periodic shift would carry across the
    // box edge, relative to the mass of the slice.
    double mass = 0.0, wrapped = 0.0;
    std::vector<int> idx;
    for (std::size_t f = 0; f < g.total(); ++f) {
      g.unflatten(f, idx);
      const double v = std::abs(K.data[s][f]);
      mass += v;
      double a = std::abs(shift(idx));
      if (a == 0.0) continue;
      if (a >= g.R[0]) throw AliasingError("chart shift exceeds the box half-width");
      double x0 = g.x(0, idx[0]);
      if (x0 - a <= -g.R[0] + g.h(0) || x0 + a >= g.R[0] - g.h(0)) wrapped += v;
    }
    const double worst = mass > 0.0 ? wrapped / mass : 0.0;
    if (worst > tail_tolerance)
      throw AliasingError("kernel mass near the box edge (" + sci(worst) + ") exceeds the tolerance " +
                          sci(tail_tolerance));
    shift_lines(g, out.data[s], 0, shift);
  }
  return out;
}

}  // namespace

HeisenbergModel::HeisenbergModel(int d_, Eigen::MatrixXd B_) : d(d_), B(std::move(B_)) {
  if (d < 1) throw InvalidParameter("HeisenbergModel: d must be >= 1");
  if (B.rows() != d || B.cols() != d) throw InvalidParameter("HeisenbergModel: B must be d x d");
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      if (B(j, k) + B(k, j) != 0.0) throw InvalidParameter("HeisenbergModel: B must be antisymmetric");
}

HeisenbergModel HeisenbergModel::heisenberg(int n, int m) {
  if (n < 1 || m < 0) throw InvalidParameter("heisenberg: n >= 1, m >= 0");
  const int d = 2 * n + m;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    B(i, n + i) = -1.0;
    B(n + i, i) = 1.0;
  }
  return HeisenbergModel(d, B);
}

HeisenbergModel HeisenbergModel::abelian(int d) { return HeisenbergModel(d, Eigen::MatrixXd::Zero(d, d)); }

Vec HeisenbergModel::c(const Vec& y) const {
  Vec out = Vec::Zero(dim());
  for (int j = 1; j <= d; ++j)
    for (int k = 1; k <= d; ++k) out[j] += 0.5 * b(j, k) * y[k];
  return out;
}

Signature HeisenbergModel::symbol_signature(bool with_t) const { return Signature{dim(), dim(), with_t, 0}; }
Signature HeisenbergModel::space_signature() const { return Signature{dim(), 0, false, 0}; }

void to_json(nlohmann::json& j, const HeisenbergModel& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.d; ++r) {
    std::vector<double> row(m.d);
    for (int c = 0; c < m.d; ++c) row[c] = m.B(r, c);
    rows.push_back(row);
  }
  j = {{"d", m.d}, {"B", rows}};
}

void from_json(const nlohmann::json& j, HeisenbergModel& m) {
  try {
    if (j.contains("preset")) {
      std::string p = j.at("preset");
      if (p == "heisenberg") m = HeisenbergModel::heisenberg(j.value("n", 1), j.value("m", 0));
      else if (p == "abelian") m = HeisenbergModel::abelian(j.at("d"));
      else throw ConfigError("unknown model preset '" + p + "'");
      return;
    }
    int d = j.at("d");
    auto rows = j.at("B").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != d) throw ConfigError("model B must have d rows");
    Eigen::MatrixXd B(d, d);
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(rows[r].size()) != d) throw ConfigError("model B must be square");
      for (int c = 0; c < d; ++c) B(r, c) = rows[r][c];
    }
    m = HeisenbergModel(d, B);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
}

Vec group_mul(const HeisenbergModel& M, const Vec& x, const Vec& xp) {
  require_dim(M, x, "group_mul");
  require_dim(M, xp, "group_mul");
  Vec out = x + xp;
  double bil = 0.0;
  for (int j = 1; j <= M.d; ++j)
    for (int k = 1; k <= M.d; ++k) bil += M.b(j, k) * x[k] * xp[j];
  out[0] += 0.5 * bil;
  return out;
}

Vec group_inverse(const HeisenbergModel& M, const Vec& x) {
  require_dim(M, x, "group_inverse");
  return -x;
}

Expr model_field(const HeisenbergModel& M, int j, const Expr& f) {
  if (j < 0 || j > M.d) throw InvalidParameter("model_field: j out of range");
  Expr d0 = differentiate(f, 0);
  if (j == 0) return d0;
  return differentiate(f, j) + c_exprs(M)[j] * d0;
}

double model_field_apply(const HeisenbergModel& M, int j, const SymbolExpr& f, const Vec& x) {
  require_dim(M, x, "model_field_apply");
  if (f.sig.n_x != M.dim()) throw InvalidParameter("model_field_apply: f must be a function of x_0..x_d");
  std::vector<double> p(f.sig.arity(), 0.0);
  for (int k = 0; k < M.dim(); ++k) p[k] = x[k];
  return Evaluator(model_field(M, j, f.expr))(p);
}

Vec heis_dilate(double s, const Vec& v) {
  if (!(s > 0.0)) throw InvalidParameter("heis_dilate: s must be positive");
  Vec out = s * v;
  out[0] *= s;
  return out;
}

ChartPoint exp_chart(const HeisenbergModel& M, const Vec& y, const Vec& v, double t) {
  require_dim(M, y, "exp_chart");
  require_dim(M, v, "exp_chart");
  Vec c = M.c(y);
  double cv = 0.0;
  for (int j = 1; j <= M.d; ++j) cv += v[j] * c[j];
  ChartPoint p{y, Vec(M.dim()), t};
  if (t == 0.0) {
    p.second = v;
    p.second[0] = v[0] + cv;
    return p;
  }
  p.second = y - t * v;
  p.second[0] = y[0] - t * t * v[0] - t * cv;
  return p;
}

Vec exp_chart_inverse(const HeisenbergModel& M, const Vec& y, const Vec& y2, double t) {
  require_dim(M, y, "exp_chart_inverse");
  require_dim(M, y2, "exp_chart_inverse");
  if (t == 0.0) throw InvalidParameter("exp_chart_inverse: t must be nonzero");
  Vec v = (y - y2) / t;
  Vec c = M.c(y);
  double cv = 0.0;
  for (int j = 1; j <= M.d; ++j) cv += v[j] * c[j];
  v[0] = (y[0] - y2[0] - t * cv) / (t * t);
  return v;
}

Vec phi_y(const HeisenbergModel& M, const Vec& y, const Vec& v) {
  require_dim(M, v, "phi_y");
  Vec c = M.c(y);
  Vec out = -v;
  for (int j = 1; j <= M.d; ++j) out[0] -= v[j] * c[j];
  return out;
}

Eigen::MatrixXd phi_y_matrix(const HeisenbergModel& M, const Vec& y) {
  Vec c = M.c(y);
  Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(M.dim(), M.dim());
  for (int j = 1; j <= M.d; ++j) A(0, j) = -c[j];
  return A;
}

Vec sigma(const HeisenbergModel& M, const Vec& x, const Vec& eta) {
  require_dim(M, eta, "sigma");
  Vec c = M.c(x);
  Vec out = eta;
  for (int j = 1; j <= M.d; ++j) out[j] += c[j] * eta[0];
  return out;
}

Vec sigma_tilde(const HeisenbergModel& M, const Vec& x, const Vec& eta) {
  require_dim(M, eta, "sigma_tilde");
  Vec c = M.c(x);
  Vec out = eta;
  for (int j = 1; j <= M.d; ++j) out[j] -= c[j] * eta[0];
  return out;
}

SymbolExpr sigma_symbol(const HeisenbergModel& M, int j) {
  if (j < 0 || j > M.d) throw InvalidParameter("sigma_symbol: j out of range");
  Signature sig = M.symbol_signature();
  Expr e = xi_var(sig, j);
  if (j > 0) e = e + c_exprs(M)[j] * xi_var(sig, 0);
  return {sig, e};
}

SymbolExpr pull_back_sigma(const HeisenbergModel& M, const SymbolExpr& f) {
  Signature sig = f.sig;
  if (sig.n_x != M.dim() || sig.d_xi != M.dim()) throw InvalidParameter("pull_back_sigma: f must live on (x, xi)");
  auto c = c_exprs(M);
  std::map<int, Expr> repl;
  for (int j = 1; j <= M.d; ++j) repl[sig.xi_index(j)] = xi_var(sig, j) + c[j] * xi_var(sig, 0);
  return {sig, substitute(f.expr, repl)};
}

double prop116_residual(const HeisenbergModel& M, const Vec& y, const Vec& eta) {
  Eigen::MatrixXd A = phi_y_matrix(M, y);
  Vec lhs = A.transpose().partialPivLu().solve(eta);
  Vec rhs = sigma_tilde(M, y, -eta);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

ChartPoint zoom_alpha_tilde(double s, const ChartPoint& p) {
  if (!(s > 0.0)) throw InvalidParameter("zoom: s must be positive");
  return {p.y, heis_dilate(s, p.second), p.t / s};
}

ChartPoint zoom_beta(double s, const ChartPoint& p) {
  if (!(s > 0.0)) throw InvalidParameter("zoom: s must be positive");
  return {p.y, heis_dilate(s, p.second), s * p.t};
}

ChartPoint zoom_alpha_tilde_via_chart(const HeisenbergModel& M, double s, const ChartPoint& p) {
  if (!(s > 0.0)) throw InvalidParameter("zoom: s must be positive");
  if (p.t == 0.0) return {p.y, heis_dilate(s, p.second), 0.0};
  ChartPoint g = exp_chart(M, p.y, p.second, p.t);
  return {p.y, exp_chart_inverse(M, p.y, g.second, p.t / s), p.t / s};
}

// -- grids ------------------------------------------------------------------

void KernelGrid::save(const std::string& path) const {
  nlohmann::json grid_j, base_j = nlohmann::json::array();
  to_json(grid_j, grid);
  for (const auto& y : base) base_j.push_back(to_std(y));
  nlohmann::json header = {{"format", "phg-kernel-grid"},
                           {"version", 1},
                           {"grid", grid_j},
                           {"base", base_j},
                           {"domain", domain},
                           {"convention", {{"forward_sign", convention.forward_sign}, {"two_pi", convention.two_pi}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << header.dump() << '\n';
  for (const auto& d : data) out.write(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(Complex));
  if (!out) throw ConfigError("short write to " + path);
}

KernelGrid KernelGrid::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  KernelGrid k;
  try {
    auto h = nlohmann::json::parse(line);
    if (h.at("format") != "phg-kernel-grid" || h.at("version") != 1) throw ConfigError(path + ": not a kernel grid");
    k.grid = h.at("grid").get<BoxGrid>();
    for (const auto& y : h.at("base")) {
      auto v = y.get<std::vector<double>>();
      k.base.push_back(Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    k.domain = h.at("domain");
    k.convention.forward_sign = h.at("convention").at("forward_sign");
    k.convention.two_pi = h.at("convention").at("two_pi");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": bad header: " + e.what());
  }
  if (!(k.convention == kDftConvention)) throw ConfigError(path + ": DFT convention does not match");
  k.data.assign(k.base.size(), CVec(k.grid.total()));
  for (auto& d : k.data) {
    in.read(reinterpret_cast<char*>(d.data()), d.size() * sizeof(Complex));
    if (!in) throw ConfigError(path + ": truncated data");
  }
  return k;
}

CVec quantize(const HeisenbergModel& M, const SymbolExpr& q, const SymbolExpr& phi, const BoxGrid& grid,
              double tail_tolerance) {
  const int D = M.dim();
  if (grid.dim() != D) throw InvalidParameter("quantize: grid dimension does not match the model");
  if (q.sig.n_x != D || q.sig.d_xi != D || q.sig.has_t) throw InvalidParameter("quantize: q must live on (x, xi)");
  if (phi.sig.arity() != D) throw InvalidParameter("quantize: phi must be a function of x_0..x_d");
  CVec ph = sample(phi.expr, grid, false, {}, {});
  double tail = boundary_fraction(grid, ph);
  if (tail > tail_tolerance)
    throw AliasingError("quantize: phi is not contained in the box (edge fraction " + sci(tail) + ")");
  CVec hat = ph;
  dft_forward(grid, hat);

  auto depends = [&](const Expr& e, int from, int to) {
    for (int v = from; v < to; ++v)
      if (e->depends_on(v)) return true;
    return false;
  };
  std::vector<Expr> terms = q.expr->op() == Op::Add ? q.expr->kids() : std::vector<Expr>{q.expr};
  std::vector<std::pair<Expr, Expr>> split;
  bool separable = true;
  for (const auto& term : terms) {
    std::vector<Expr> factors = term->op() == Op::Mul ? term->kids() : std::vector<Expr>{term};
    std::vector<Expr> xs, xis;
    for (const auto& f : factors) {
      bool dx = depends(f, 0, D), dxi = depends(f, D, 2 * D);
      if (dx && dxi) separable = false;
      (dxi ? xis : xs).push_back(f);
    }
    split.emplace_back(mul(xs), mul(xis));
  }

  CVec out(grid.total(), 0.0);
  if (separable) {
    for (const auto& [ax, bxi] : split) {
      CVec w = sample(bxi, grid, true, std::vector<double>(D, 0.0), {});
      for (std::size_t i = 0; i < w.size(); ++i) w[i] *= hat[i];
      dft_inverse(grid, w);
      CVec a = sample(ax, grid, false, {}, std::vector<double>(D, 0.0));
      for (std::size_t i = 0; i < w.size(); ++i) out[i] += a[i] * w[i];
    }
    return out;
  }
  const std::size_t n = grid.total();
  if (static_cast<double>(n) * static_cast<double>(n) > 1.7e10)
    throw UnsupportedError("quantize: non-separable symbol on a grid too large for the direct sum");
  double vol = 1.0;
  for (int a = 0; a < D; ++a) vol *= grid.dxi(a) / (2.0 * M_PI);
  Evaluator proto(q.expr);
  parallel_for(n, [&](std::size_t b, std::size_t e, int) {
    Evaluator ev = proto;
    std::vector<double> p(2 * D), x, xi;
    for (std::size_t i = b; i < e; ++i) {
      grid.x_point(i, x);
      std::copy(x.begin(), x.end(), p.begin());
      Complex acc = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        grid.xi_point(m, xi);
        std::copy(xi.begin(), xi.end(), p.begin() + D);
        double phase = 0.0;
        for (int a = 0; a < D; ++a) phase += x[a] * xi[a];
        acc += std::polar(ev(p), phase) * hat[m];
      }
      out[i] = acc * vol;
    }
  });
  return out;
}

KernelGrid kernel_from_symbol(const HeisenbergModel& M, const SymbolExpr& q, const BoxGrid& grid,
                              const std::vector<Vec>& base, double tail_tolerance) {
  const int D = M.dim();
  if (grid.dim() != D) throw InvalidParameter("kernel_from_symbol: grid dimension does not match the model");
  if (q.sig.n_x != D || q.sig.d_xi != D || q.sig.has_t)
    throw InvalidParameter("kernel_from_symbol: q must live on (x, xi)");
  KernelGrid k;
  k.grid = grid;
  k.base = base;
  k.domain = "v";
  for (const auto& y : base) {
    require_dim(M, y, "kernel_from_symbol");
    CVec s = sample(q.expr, grid, true, to_std(y), {});
    double tail = boundary_fraction(grid, s);
    if (tail > tail_tolerance)
      throw AliasingError("kernel_from_symbol: q is not decayed at the frequency box edge (edge fraction " +
                          sci(tail) + ")");
    dft_inverse(grid, s);
    k.data.push_back(std::move(s));
  }
  return k;
}

KernelGrid pushforward_chart_t1(const HeisenbergModel& M, const KernelGrid& K, double tail_tolerance) {
  return shear(M, K, 1.0, tail_tolerance);
}

KernelGrid pullback_chart_t1(const HeisenbergModel& M, const KernelGrid& Kt, double tail_tolerance) {
  return shear(M, Kt, -1.0, tail_tolerance);
}

Theorem108Report theorem108_check(const HeisenbergModel& M, const SymbolExpr& f, const BoxGrid& grid,
                                  const std::vector<Vec>& base, double wrap_tolerance) {
  Theorem108Report rep;
  rep.grid = grid.describe();
  SymbolExpr q = pull_back_sigma(M, f);
  KernelGrid k = kernel_from_symbol(M, q, grid, base);
  KernelGrid kt = pushforward_chart_t1(M, k, wrap_tolerance);
  for (std::size_t s = 0; s < base.size(); ++s) {
    CVec fk = kt.data[s];
    dft_forward(grid, fk);
    CVec want = sample(f.expr, grid, true, to_std(base[s]), {});
    double dev = rel_dev(fk, want);
    rep.per_slice.push_back(dev);
    rep.deviation = std::max(rep.deviation, dev);
  }
  return rep;
}

Prop123Report prop123_check(const HeisenbergModel& M, const SymbolExpr& u, const BoxGrid& grid,
                            const std::vector<Vec>& base, const std::vector<double>& t_values, double s) {
  const int D = M.dim();
  if (!(s > 0.0)) throw InvalidParameter("prop123_check: s must be positive");
  if (grid.dim() != D) throw InvalidParameter("prop123_check: grid dimension does not match the model");
  if (u.sig.n_x != D || u.sig.d_xi != D || !u.sig.has_t)
    throw InvalidParameter("prop123_check: u must live on (x, xi, t)");
  Prop123Report rep;
  rep.s = s;
  rep.t_values = t_values;
  rep.grid = grid.describe();
  const double Q = M.d + 2.0;
  // beta_s^* u(x, xi, t) = u(x, delta_s xi, s t).
  std::map<int, Expr> dil;
  for (int a = 0; a < D; ++a) dil[u.sig.xi_index(a)] = (a == 0 ? s * s : s) * xi_var(u.sig, a);
  const Expr beta_u = substitute(u.expr, dil);
  for (const auto& y : base) {
    require_dim(M, y, "prop123_check");
    for (double t : t_values) {
      CVec k = sample(u.expr, grid, true, to_std(y), {s * t});
      dft_inverse(grid, k);
      // alpha~_{s*} k(v, t) = s^{-Q} k(delta_{1/s} v, s t).
      for (int a = 0; a < D; ++a) {
        std::vector<double> pts(grid.n[a]);
        const double f = a == 0 ? 1.0 / (s * s) : 1.0 / s;
        for (int i = 0; i < grid.n[a]; ++i) pts[i] = f * grid.x(a, i);
        resample_axis(grid, k, a, pts);
      }
      for (auto& v : k) v *= std::pow(s, -Q);
      dft_forward(grid, k);
      CVec want = sample(beta_u, grid, true, to_std(y), {s * t});
      double dev = rel_dev(k, want);
      rep.per_slice.push_back(dev);
      rep.deviation = std::max(rep.deviation, dev);
    }
  }
  return rep;
}

std::vector<Vec> default_base_points(const HeisenbergModel& M, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec y(M.dim());
    for (int a = 0; a < M.dim(); ++a) y[a] = i == 0 ? 0.0 : ud(rng);
    out.push_back(y);
  }
  return out;
}

nlohmann::json to_json(const Theorem108Report& r) {
  return {{"per_slice", r.per_slice}, {"deviation", r.deviation}, {"grid", r.grid}};
}

nlohmann::json to_json(const Prop123Report& r) {
  return {{"s", r.s}, {"t_values", r.t_values}, {"per_slice", r.per_slice}, {"deviation", r.deviation}, {"grid", r.grid}};
}

}  // namespace phg
