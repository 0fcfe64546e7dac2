#pragma once

#include <cstdint>
#include <vector>

#include "phg/grading.hpp"
#include "phg/symbol.hpp"

namespace phg {

struct GridSpec {
  double r0 = 1.0;
  int L = 10;
  /// 0 selects 2 D^2 directions for a fiber of dimension D.
  int directions = 0;
  int base_points = 5;
  /// Half-width of the box the base points are drawn from.
  double base_box = 1.0;
  /// Dilate (xi, t) jointly under the extended weights.
  bool span_t = false;
  /// Fixed t values used when the signature has t and span_t is off.
  std::vector<double> t_samples;
  std::uint64_t seed = 20240917;
};

/// Base points x, dyadic quasi-norm shells r_i = r0 2^i and unit
/// quasi-sphere directions in the fiber (xi, or (xi, t) when span_t).
class EvaluationGrid {
 public:
  EvaluationGrid(const Signature& sig, const Weights& w, const GridSpec& spec);

  const Signature& sig() const { return sig_; }
  const GridSpec& spec() const { return spec_; }
  const Weights& weights() const { return w_; }
  /// Weights of the fiber coordinates (extended when span_t).
  const Weights& fiber_weights() const { return fiber_w_; }
  bool span_t() const { return spec_.span_t; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<std::vector<double>>& base() const { return base_; }
  const std::vector<std::vector<double>>& directions() const { return dirs_; }
  const std::vector<double>& t_samples() const { return t_; }
  /// Variable indices that make up the fiber.
  std::vector<int> fiber_slots() const;

  std::size_t points_per_shell() const;
  /// Writes the k-th point of shell i into `out` (resized to the arity).
  void point(std::size_t shell, std::size_t k, std::vector<double>& out) const;
  /// Index of the base point used by the k-th point of a shell.
  std::size_t base_of(std::size_t k) const;

  /// A copy with radii r0 2^i for i = 0..L replaced.
  EvaluationGrid with_shells(double r0, int L) const;

 private:
  Signature sig_;
  Weights w_;
  Weights fiber_w_;
  GridSpec spec_;
  std::vector<double> radii_;
  std::vector<std::vector<double>> base_;
  std::vector<std::vector<double>> dirs_;
  std::vector<double> t_;
};

/// delta_{1/|v|} v for the smooth quasi-norm.
std::vector<double> to_unit_quasi_sphere(const Weights& w, std::vector<double> v);

}  // namespace phg
