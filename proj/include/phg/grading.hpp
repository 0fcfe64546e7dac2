#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace phg {

/// Dilation exponents (rho_1, ..., rho_d), each a positive integer.
class Weights {
 public:
  Weights() = default;
  explicit Weights(std::vector<int> rho);

  int d() const noexcept { return static_cast<int>(rho_.size()); }
  int operator[](int k) const { return rho_[k]; }
  const std::vector<int>& rho() const noexcept { return rho_; }
  /// lcm of the weights.
  int lcm() const noexcept;
  /// Homogeneous dimension sum(rho).
  int homogeneous_dimension() const noexcept;
  /// The weights with an extra weight-1 slot appended (the t slot).
  Weights extended() const;
  bool operator==(const Weights& o) const { return rho_ == o.rho_; }

 private:
  std::vector<int> rho_;
};

std::vector<double> dilate(const Weights& w, double s, std::span<const double> v);
/// (delta_s(v), s t): the last entry of the result is the t slot.
std::vector<double> dilate_ext(const Weights& w, double s, std::span<const double> v, double t);

enum class NormVariant { Sum, Smooth };

NormVariant parse_variant(const std::string& name);
std::string variant_name(NormVariant v);

/// Homogeneous quasi-norm. Sum: sum |v_k|^{1/rho_k}.
/// Smooth: (sum v_k^{2a/rho_k})^{1/(2a)}, a = lcm(rho), smooth away from 0.
struct QuasiNorm {
  Weights weights;
  NormVariant variant = NormVariant::Smooth;

  double operator()(std::span<const double> v) const;
};

/// Sample-measured constants for C1 ||x||^a <= |x| <= C2 ||x||^b
/// (||.|| Euclidean) and the quasi-triangle constant
/// C = max |x+y| / (|x| + |y|).
struct NormComparisonReport {
  double C1 = 0.0;
  double C2 = 0.0;
  double a = 1.0;
  double b = 1.0;
  double triangle_constant = 0.0;
  std::size_t samples = 0;
  std::string sample_description;
};

/// Exponents a, b are picked from {1/rho_k} to minimize C2/C1 on the sample.
/// Points equal to 0 are skipped for the ratio fit.
NormComparisonReport measure_norm_constants(const QuasiNorm& q, const std::vector<std::vector<double>>& samples,
                                            const std::string& description = "");

/// Seeded Gaussian samples, useful for measure_norm_constants.
std::vector<std::vector<double>> gaussian_samples(int d, std::size_t count, std::uint64_t seed, double scale = 1.0);

void to_json(nlohmann::json& j, const Weights& w);
void from_json(const nlohmann::json& j, Weights& w);
void to_json(nlohmann::json& j, const QuasiNorm& q);
void from_json(const nlohmann::json& j, QuasiNorm& q);
void to_json(nlohmann::json& j, const NormComparisonReport& r);

}  // namespace phg
