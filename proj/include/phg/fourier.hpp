#pragma once

// Centered DFT on tensor boxes, approximating
//   F g(xi)      = int e^{-i x.xi} g(x) dx
//   F^{-1} h(x)  = (2 pi)^{-D} int e^{i x.xi} h(xi) dxi
// with x_n = -R + n h (h = 2R/N) and xi_m = (m - N/2) pi / R per axis.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace phg {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

struct DftConvention {
  int forward_sign = -1;
  /// Where the (2 pi)^{-D} goes: "inverse".
  std::string two_pi = "inverse";
  bool operator==(const DftConvention& o) const { return forward_sign == o.forward_sign && two_pi == o.two_pi; }
};

inline const DftConvention kDftConvention{};

/// Row-major tensor grid; axis 0 varies slowest. Sizes must be powers of two.
struct BoxGrid {
  std::vector<int> n;
  std::vector<double> R;

  BoxGrid() = default;
  BoxGrid(int dim, int points, double half_width);
  BoxGrid(std::vector<int> points, std::vector<double> half_width);

  int dim() const { return static_cast<int>(n.size()); }
  std::size_t total() const;
  double h(int axis) const { return 2.0 * R[axis] / n[axis]; }
  double dxi(int axis) const { return M_PI / R[axis]; }
  double x(int axis, int i) const { return -R[axis] + i * h(axis); }
  double xi(int axis, int m) const { return (m - n[axis] / 2) * dxi(axis); }
  /// Multi-index of a flat position.
  void unflatten(std::size_t flat, std::vector<int>& idx) const;
  std::size_t flatten(const std::vector<int>& idx) const;
  void x_point(std::size_t flat, std::vector<double>& out) const;
  void xi_point(std::size_t flat, std::vector<double>& out) const;
  std::string describe() const;
};

void to_json(nlohmann::json& j, const BoxGrid& g);
void from_json(const nlohmann::json& j, BoxGrid& g);

/// x samples -> xi samples.
void dft_forward(const BoxGrid& g, CVec& data);
/// xi samples -> x samples.
void dft_inverse(const BoxGrid& g, CVec& data);

/// Replaces each line along `axis` by its trigonometric interpolant shifted:
/// out(x) = in(x + shift(idx)), idx the multi-index of the line (axis entry 0).
void shift_lines(const BoxGrid& g, CVec& data, int axis, const std::function<double(const std::vector<int>&)>& shift);

/// Resamples along `axis` at the given coordinates using the trigonometric
/// interpolant (the grid itself is unchanged; points.size() must equal n[axis]).
void resample_axis(const BoxGrid& g, CVec& data, int axis, const std::vector<double>& points);

/// max |data| over the boundary faces divided by max |data| (0 for zero data).
double boundary_fraction(const BoxGrid& g, const CVec& data);

double max_abs(const CVec& data);

}  // namespace phg
