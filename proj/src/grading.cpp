#include "phg/grading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "phg/errors.hpp"

namespace phg {

Weights::Weights(std::vector<int> rho) : rho_(std::move(rho)) {
  if (rho_.empty()) throw InvalidParameter("weights must have d >= 1");
  for (int r : rho_)
    if (r < 1) throw InvalidParameter("every weight must be >= 1");
}

int Weights::lcm() const noexcept {
  int a = 1;
  for (int r : rho_) a = std::lcm(a, r);
  return a;
}

int Weights::homogeneous_dimension() const noexcept { return std::accumulate(rho_.begin(), rho_.end(), 0); }

Weights Weights::extended() const {
  auto r = rho_;
  r.push_back(1);
  return Weights(std::move(r));
}

std::vector<double> dilate(const Weights& w, double s, std::span<const double> v) {
  if (!(s > 0.0)) throw InvalidParameter("dilation parameter must be positive");
  if (static_cast<int>(v.size()) != w.d()) throw InvalidParameter("dilate: dimension mismatch");
  std::vector<double> out(v.size());
  for (int k = 0; k < w.d(); ++k) out[k] = std::pow(s, w[k]) * v[k];
  return out;
}

std::vector<double> dilate_ext(const Weights& w, double s, std::span<const double> v, double t) {
  auto out = dilate(w, s, v);
  out.push_back(s * t);
  return out;
}

NormVariant parse_variant(const std::string& name) {
  if (name == "sum") return NormVariant::Sum;
  if (name == "smooth") return NormVariant::Smooth;
  throw ConfigError("unknown quasi-norm variant '" + name + "'");
}

std::string variant_name(NormVariant v) { return v == NormVariant::Sum ? "sum" : "smooth"; }

double QuasiNorm::operator()(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != weights.d()) throw InvalidParameter("quasi_norm: dimension mismatch");
  if (variant == NormVariant::Sum) {
    double s = 0.0;
    for (int k = 0; k < weights.d(); ++k) s += std::pow(std::abs(v[k]), 1.0 / weights[k]);
    return s;
  }
  const int a = weights.lcm();
  // Rescale by the largest component to keep the even powers in range.
  double scale = 0.0;
  for (int k = 0; k < weights.d(); ++k) scale = std::max(scale, std::pow(std::abs(v[k]), 1.0 / weights[k]));
  if (scale == 0.0) return 0.0;
  double p = 0.0;
  for (int k = 0; k < weights.d(); ++k) {
    double y = std::abs(v[k]) / std::pow(scale, weights[k]);
    p += std::pow(y, 2.0 * a / weights[k]);
  }
  return scale * std::pow(p, 1.0 / (2.0 * a));
}

NormComparisonReport measure_norm_constants(const QuasiNorm& q, const std::vector<std::vector<double>>& samples,
                                            const std::string& description) {
  if (samples.empty()) throw InvalidParameter("measure_norm_constants: empty sample set");
  std::vector<double> qn, en;
  for (const auto& x : samples) {
    double e = 0.0;
    for (double c : x) e += c * c;
    e = std::sqrt(e);
    if (e == 0.0) continue;
    qn.push_back(q(x));
    en.push_back(e);
  }
  if (qn.empty()) throw InvalidParameter("measure_norm_constants: all samples are 0");

  std::set<double> candidates;
  for (int r : q.weights.rho()) candidates.insert(1.0 / r);

  NormComparisonReport best;
  double best_spread = std::numeric_limits<double>::infinity();
  for (double a : candidates) {
    double c1 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < qn.size(); ++i) c1 = std::min(c1, qn[i] / std::pow(en[i], a));
    for (double b : candidates) {
      double c2 = 0.0;
      for (std::size_t i = 0; i < qn.size(); ++i) c2 = std::max(c2, qn[i] / std::pow(en[i], b));
      double spread = std::log(c2 / c1);
      if (spread < best_spread) {
        best_spread = spread;
        best.C1 = c1;
        best.C2 = c2;
        best.a = a;
        best.b = b;
      }
    }
  }

  // Quasi-triangle constant over all pairs (capped for large samples).
  const std::size_t n = samples.size();
  const std::size_t stride = n > 400 ? n / 400 : 1;
  double tri = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    for (std::size_t j = 0; j < n; j += stride) {
      double den = q(samples[i]) + q(samples[j]);
      if (den == 0.0) continue;
      std::vector<double> s(samples[i].size());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = samples[i][k] + samples[j][k];
      tri = std::max(tri, q(s) / den);
    }
  }
  best.triangle_constant = tri;
  best.samples = qn.size();
  best.sample_description = description;
  return best;
}

std::vector<std::vector<double>> gaussian_samples(int d, std::size_t count, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<std::vector<double>> out(count, std::vector<double>(d));
  for (auto& p : out)
    for (auto& c : p) c = nd(rng);
  return out;
}

void to_json(nlohmann::json& j, const Weights& w) { j = nlohmann::json{{"rho", w.rho()}}; }

void from_json(const nlohmann::json& j, Weights& w) {
  try {
    w = Weights(j.at("rho").get<std::vector<int>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("weights: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const QuasiNorm& q) {
  j = nlohmann::json{{"rho", q.weights.rho()}, {"variant", variant_name(q.variant)}};
}

void from_json(const nlohmann::json& j, QuasiNorm& q) {
  from_json(j, q.weights);
  q.variant = parse_variant(j.value("variant", std::string("smooth")));
}

void to_json(nlohmann::json& j, const NormComparisonReport& r) {
  j = nlohmann::json{{"C1", r.C1},
                     {"C2", r.C2},
                     {"a", r.a},
                     {"b", r.b},
                     {"triangle_constant", r.triangle_constant},
                     {"samples", r.samples},
                     {"sample_description", r.sample_description}};
}

}  // namespace phg
