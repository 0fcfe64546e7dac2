#pragma once

// Model Heisenberg manifold R^{d+1} with coordinates (x_0, x_1, ..., x_d):
// group law, left-invariant fields X_j, Heisenberg dilations, exponential
// charts, the sigma / sigma~ symbol changes, quantization on DFT grids and the
// chart/Fourier checks that tie the two calculi together.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

#include "phg/fourier.hpp"
#include "phg/symbol.hpp"

namespace phg {

using Vec = Eigen::VectorXd;

struct HeisenbergModel {
  int d = 0;
  /// b_{jk}, j, k = 1..d stored at (j-1, k-1).
  Eigen::MatrixXd B;

  HeisenbergModel() = default;
  HeisenbergModel(int d, Eigen::MatrixXd B);
  /// B = [[0, -I_n], [I_n, 0]] padded with m zero rows/columns.
  static HeisenbergModel heisenberg(int n, int m = 0);
  static HeisenbergModel abelian(int d);

  int dim() const { return d + 1; }
  double b(int j, int k) const { return B(j - 1, k - 1); }
  /// c_j(y) = 1/2 sum_k b_{jk} y_k, j = 1..d (entry 0 unused, 0).
  Vec c(const Vec& y) const;
  /// Signature (x_0..x_d, xi_0..xi_d) with zero-based names.
  Signature symbol_signature(bool with_t = false) const;
  Signature space_signature() const;
};

void to_json(nlohmann::json& j, const HeisenbergModel& m);
void from_json(const nlohmann::json& j, HeisenbergModel& m);

/// (x.x')_0 = x_0 + x'_0 + 1/2 sum_{j,k} b_{jk} x_k x'_j, other slots add.
/// This is the law whose left-invariant fields are the X_j below.
Vec group_mul(const HeisenbergModel& M, const Vec& x, const Vec& xp);
Vec group_inverse(const HeisenbergModel& M, const Vec& x);

/// X_0 = d/dx_0, X_j = d/dx_j + 1/2 sum_k b_{jk} x_k d/dx_0, applied to an
/// expression whose variables 0..d are the space coordinates.
Expr model_field(const HeisenbergModel& M, int j, const Expr& f);
double model_field_apply(const HeisenbergModel& M, int j, const SymbolExpr& f, const Vec& x);

/// (s^2 v_0, s v_1, ..., s v_d).
Vec heis_dilate(double s, const Vec& v);

struct ChartPoint {
  Vec y;
  Vec second;  // y' for t != 0, the tangent vector v.X|_y for t = 0
  double t = 0.0;
};

/// (y, exp(delta_t(-v).X).y, t) in closed form; at t = 0 the osculating datum.
ChartPoint exp_chart(const HeisenbergModel& M, const Vec& y, const Vec& v, double t);
/// Inverse on the pair-groupoid part (t != 0): v with exp_chart(y, v, t) = (y, y2, t).
Vec exp_chart_inverse(const HeisenbergModel& M, const Vec& y, const Vec& y2, double t);

/// phi_y(v) = (-v_0 - sum_j v_j c_j(y), -v_1, ..., -v_d).
Vec phi_y(const HeisenbergModel& M, const Vec& y, const Vec& v);
Eigen::MatrixXd phi_y_matrix(const HeisenbergModel& M, const Vec& y);

/// sigma_0 = eta_0, sigma_j = eta_j + c_j(x) eta_0; sigma~ flips the sign.
Vec sigma(const HeisenbergModel& M, const Vec& x, const Vec& eta);
Vec sigma_tilde(const HeisenbergModel& M, const Vec& x, const Vec& eta);
/// sigma_j as a symbol over (x, xi).
SymbolExpr sigma_symbol(const HeisenbergModel& M, int j);
/// q = f(x, sigma(x, xi)) for f over (x, xi).
SymbolExpr pull_back_sigma(const HeisenbergModel& M, const SymbolExpr& f);

/// || (phi_y^{-1})^T eta - sigma~(y, -eta) ||_inf.
double prop116_residual(const HeisenbergModel& M, const Vec& y, const Vec& eta);
inline double prop116_check(const HeisenbergModel& M, const Vec& y, const Vec& eta) {
  return prop116_residual(M, y, eta);
}

// -- zoom actions ---------------------------------------------------------

/// (x, delta_s v, t / s).
ChartPoint zoom_alpha_tilde(double s, const ChartPoint& p);
/// (x, delta_s v, s t).
ChartPoint zoom_beta(double s, const ChartPoint& p);
/// Exp^{-1} o alpha_s o Exp evaluated through the charts (t != 0).
ChartPoint zoom_alpha_tilde_via_chart(const HeisenbergModel& M, double s, const ChartPoint& p);

// -- kernels on grids -----------------------------------------------------

inline constexpr double kTailTolerance = 1e-10;

/// Samples over the second slot (v or xi) on a box, one array per base point y.
struct KernelGrid {
  BoxGrid grid;
  std::vector<Vec> base;
  /// "v" for kernels in the (y, v) form, "xi" for symbols.
  std::string domain = "v";
  DftConvention convention = kDftConvention;
  std::vector<CVec> data;

  void save(const std::string& path) const;
  static KernelGrid load(const std::string& path);
};

/// Op(q) phi on the grid (phi over the space coordinates). Symbols that split
/// into sums of x-only times xi-only factors are applied with one transform
/// per term; others fall back to the direct sum on small grids.
CVec quantize(const HeisenbergModel& M, const SymbolExpr& q, const SymbolExpr& phi, const BoxGrid& grid,
              double tail_tolerance = kTailTolerance);

/// K(y, w) = F_2^{-1}(q)(y, w), so that the Schwartz kernel is k(x, x - w) = K(x, w).
KernelGrid kernel_from_symbol(const HeisenbergModel& M, const SymbolExpr& q, const BoxGrid& grid,
                              const std::vector<Vec>& base, double tail_tolerance = kTailTolerance);

/// k~(y, v) = k(y, phi_y(v) + y) = K(y, -phi_y(v)): a shear along the 0 axis,
/// applied spectrally.
/// Refuses (AliasingError) when the samples within the shift distance of the
/// box edge carry more than tail_tolerance of the slice's L1 mass: those are
/// the values the periodic shift would wrap around.
KernelGrid pushforward_chart_t1(const HeisenbergModel& M, const KernelGrid& K,
                                double tail_tolerance = kTailTolerance);
/// Inverse of pushforward_chart_t1.
KernelGrid pullback_chart_t1(const HeisenbergModel& M, const KernelGrid& Kt,
                             double tail_tolerance = kTailTolerance);

struct Theorem108Report {
  std::vector<double> per_slice;
  double deviation = 0.0;
  std::string grid;
};

/// q = sigma-bar^* f -> k -> k~ -> F_2 k~, compared with f.
Theorem108Report theorem108_check(const HeisenbergModel& M, const SymbolExpr& f, const BoxGrid& grid,
                                  const std::vector<Vec>& base, double wrap_tolerance = 1e-6);

struct Prop123Report {
  double s = 1.0;
  std::vector<double> t_values;
  std::vector<double> per_slice;
  double deviation = 0.0;
  std::string grid;
};

/// F_2 alpha~_{s*} F_2^{-1} u against beta_s^* u on (x, t) slices, u over (x, xi, t).
Prop123Report prop123_check(const HeisenbergModel& M, const SymbolExpr& u, const BoxGrid& grid,
                            const std::vector<Vec>& base, const std::vector<double>& t_values, double s);

inline Prop123Report prop123_intertwine_check(const HeisenbergModel& M, const SymbolExpr& u, const BoxGrid& grid,
                                             const std::vector<Vec>& base, const std::vector<double>& t_values,
                                             double s) {
  return prop123_check(M, u, grid, base, t_values, s);
}

/// Five small base points (|y| <= 1/2) from a seed.
std::vector<Vec> default_base_points(const HeisenbergModel& M, int count = 5, std::uint64_t seed = 20240917);

nlohmann::json to_json(const Theorem108Report& r);
nlohmann::json to_json(const Prop123Report& r);

}  // namespace phg
