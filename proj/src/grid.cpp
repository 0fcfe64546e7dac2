#include "phg/grid.hpp"

#include <cmath>
#include <random>

#include "phg/errors.hpp"

namespace phg {

std::vector<double> to_unit_quasi_sphere(const Weights& w, std::vector<double> v) {
  QuasiNorm q{w, NormVariant::Smooth};
  double n = q(v);
  if (n == 0.0) throw InvalidParameter("cannot normalize the zero vector");
  return dilate(w, 1.0 / n, v);
}

EvaluationGrid::EvaluationGrid(const Signature& sig, const Weights& w, const GridSpec& spec)
    : sig_(sig), w_(w), spec_(spec) {
  if (w.d() != sig.d_xi) throw InvalidParameter("grid weights do not match the xi arity");
  if (spec.L < 0 || !(spec.r0 > 0.0)) throw InvalidParameter("grid needs r0 > 0 and L >= 0");
  if (spec.span_t && !sig.has_t) throw InvalidParameter("span_t needs a t slot");
  fiber_w_ = spec.span_t ? w.extended() : w;
  for (int i = 0; i <= spec.L; ++i) radii_.push_back(spec.r0 * std::ldexp(1.0, i));

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ud(-spec.base_box, spec.base_box);
  std::normal_distribution<double> nd;
  if (sig.n_x == 0) {
    base_.push_back({});
  } else {
    base_.push_back(std::vector<double>(sig.n_x, 0.0));
    for (int b = 1; b < spec.base_points; ++b) {
      std::vector<double> x(sig.n_x);
      for (auto& c : x) c = ud(rng);
      base_.push_back(std::move(x));
    }
  }

  const int D = fiber_w_.d();
  const int count = spec.directions > 0 ? spec.directions : 2 * D * D;
  for (int k = 0; k < D && static_cast<int>(dirs_.size()) < count; ++k) {
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> e(D, 0.0);
      e[k] = sgn;
      if (static_cast<int>(dirs_.size()) < count) dirs_.push_back(e);
    }
  }
  while (static_cast<int>(dirs_.size()) < count) {
    std::vector<double> v(D);
    for (auto& c : v) c = nd(rng);
    dirs_.push_back(to_unit_quasi_sphere(fiber_w_, v));
  }

  if (sig.has_t && !spec.span_t) {
    if (spec.t_samples.empty()) throw InvalidParameter("signature has t: supply t_samples or span_t");
    t_ = spec.t_samples;
  }
}

std::vector<int> EvaluationGrid::fiber_slots() const {
  std::vector<int> s;
  for (int k = 0; k < sig_.d_xi; ++k) s.push_back(sig_.xi_index(k));
  if (spec_.span_t) s.push_back(sig_.t_index());
  return s;
}

std::size_t EvaluationGrid::points_per_shell() const {
  return base_.size() * dirs_.size() * std::max<std::size_t>(1, t_.size());
}

std::size_t EvaluationGrid::base_of(std::size_t k) const {
  return k / (dirs_.size() * std::max<std::size_t>(1, t_.size()));
}

void EvaluationGrid::point(std::size_t shell, std::size_t k, std::vector<double>& out) const {
  const std::size_t nt = std::max<std::size_t>(1, t_.size());
  const std::size_t ti = k % nt;
  const std::size_t di = (k / nt) % dirs_.size();
  const std::size_t bi = k / (nt * dirs_.size());
  out.assign(sig_.arity(), 0.0);
  for (int i = 0; i < sig_.n_x; ++i) out[i] = base_[bi][i];
  const double r = radii_[shell];
  const auto& dir = dirs_[di];
  for (int k2 = 0; k2 < fiber_w_.d(); ++k2) {
    double c = std::pow(r, fiber_w_[k2]) * dir[k2];
    if (k2 < sig_.d_xi) {
      out[sig_.xi_index(k2)] = c;
    } else {
      out[sig_.t_index()] = c;
    }
  }
  if (!t_.empty()) out[sig_.t_index()] = t_[ti];
}

EvaluationGrid EvaluationGrid::with_shells(double r0, int L) const {
  EvaluationGrid g = *this;
  g.spec_.r0 = r0;
  g.spec_.L = L;
  g.radii_.clear();
  for (int i = 0; i <= L; ++i) g.radii_.push_back(r0 * std::ldexp(1.0, i));
  return g;
}

}  // namespace phg
