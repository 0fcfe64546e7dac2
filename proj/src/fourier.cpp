#include "phg/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "phg/errors.hpp"
#include "phg/parallel.hpp"

namespace phg {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

// Strides of a row-major layout.
std::vector<std::size_t> strides(const BoxGrid& g) {
  std::vector<std::size_t> s(g.dim(), 1);
  for (int a = g.dim() - 2; a >= 0; --a) s[a] = s[a + 1] * g.n[a + 1];
  return s;
}

void run_fft(const BoxGrid& g, CVec& data, int sign) {
  std::vector<int> n(g.n.begin(), g.n.end());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    plan = fftw_plan_dft(g.dim(), n.data(), p, p, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lk(plan_mutex());
  fftw_destroy_plan(plan);
}

// 1D FFT of every line along `axis`.
void run_lines(const BoxGrid& g, CVec& data, int axis, int sign) {
  const auto st = strides(g);
  fftw_iodim dim{g.n[axis], static_cast<int>(st[axis]), static_cast<int>(st[axis])};
  std::vector<fftw_iodim> loops;
  for (int a = 0; a < g.dim(); ++a)
    if (a != axis) loops.push_back({g.n[a], static_cast<int>(st[a]), static_cast<int>(st[a])});
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    plan = fftw_plan_guru_dft(1, &dim, static_cast<int>(loops.size()), loops.data(), p, p, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw InvalidParameter("fftw could not plan the line transform");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lk(plan_mutex());
  fftw_destroy_plan(plan);
}

// (-1)^{i} per axis, times a constant.
void sign_scale(const BoxGrid& g, CVec& data, int offset_half, double scale) {
  std::vector<int> idx;
  for (std::size_t f = 0; f < data.size(); ++f) {
    g.unflatten(f, idx);
    int parity = 0;
    for (int a = 0; a < g.dim(); ++a) parity += idx[a] - (offset_half ? g.n[a] / 2 : 0);
    data[f] *= ((parity & 1) ? -scale : scale);
  }
}

double freq(int k, int n) { return k < n / 2 ? k : k - n; }

}  // namespace

BoxGrid::BoxGrid(int dim, int points, double half_width)
    : BoxGrid(std::vector<int>(dim, points), std::vector<double>(dim, half_width)) {}

BoxGrid::BoxGrid(std::vector<int> points, std::vector<double> half_width) : n(std::move(points)), R(std::move(half_width)) {
  if (n.empty() || n.size() != R.size()) throw InvalidParameter("BoxGrid: size mismatch");
  for (std::size_t a = 0; a < n.size(); ++a) {
    if (!power_of_two(n[a])) throw InvalidParameter("BoxGrid: sizes must be powers of two");
    if (!(R[a] > 0.0)) throw InvalidParameter("BoxGrid: half-width must be positive");
  }
}

std::size_t BoxGrid::total() const {
  std::size_t t = 1;
  for (int v : n) t *= static_cast<std::size_t>(v);
  return t;
}

void BoxGrid::unflatten(std::size_t flat, std::vector<int>& idx) const {
  idx.resize(n.size());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n[a]);
    flat /= n[a];
  }
}

std::size_t BoxGrid::flatten(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim(); ++a) f = f * n[a] + idx[a];
  return f;
}

void BoxGrid::x_point(std::size_t flat, std::vector<double>& out) const {
  std::vector<int> idx;
  unflatten(flat, idx);
  out.resize(n.size());
  for (int a = 0; a < dim(); ++a) out[a] = x(a, idx[a]);
}

void BoxGrid::xi_point(std::size_t flat, std::vector<double>& out) const {
  std::vector<int> idx;
  unflatten(flat, idx);
  out.resize(n.size());
  for (int a = 0; a < dim(); ++a) out[a] = xi(a, idx[a]);
}

std::string BoxGrid::describe() const {
  std::string s;
  for (int a = 0; a < dim(); ++a) {
    if (a) s += " x ";
    s += std::to_string(n[a]) + " on [-" + std::to_string(R[a]) + ", " + std::to_string(R[a]) + "]";
  }
  return s;
}

void to_json(nlohmann::json& j, const BoxGrid& g) { j = {{"n", g.n}, {"R", g.R}}; }

void from_json(const nlohmann::json& j, BoxGrid& g) {
  try {
    g = BoxGrid(j.at("n").get<std::vector<int>>(), j.at("R").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("BoxGrid: ") + e.what());
  }
}

// x_n xi_m = -R xi_m + 2 pi n m / N - pi n, and R xi_m = pi (m - N/2).
void dft_forward(const BoxGrid& g, CVec& data) {
  if (data.size() != g.total()) throw InvalidParameter("dft_forward: size mismatch");
  double vol = 1.0;
  for (int a = 0; a < g.dim(); ++a) vol *= g.h(a);
  sign_scale(g, data, 0, 1.0);
  run_fft(g, data, FFTW_FORWARD);
  sign_scale(g, data, 1, vol);
}

void dft_inverse(const BoxGrid& g, CVec& data) {
  if (data.size() != g.total()) throw InvalidParameter("dft_inverse: size mismatch");
  double vol = 1.0;
  for (int a = 0; a < g.dim(); ++a) vol *= g.dxi(a) / (2.0 * M_PI);
  sign_scale(g, data, 1, 1.0);
  run_fft(g, data, FFTW_BACKWARD);
  sign_scale(g, data, 0, vol);
}

void shift_lines(const BoxGrid& g, CVec& data, int axis, const std::function<double(const std::vector<int>&)>& shift) {
  if (data.size() != g.total()) throw InvalidParameter("shift_lines: size mismatch");
  const int n = g.n[axis];
  const auto st = strides(g);
  const double dxi = g.dxi(axis);
  run_lines(g, data, axis, FFTW_FORWARD);
  const std::size_t lines = g.total() / n;
  parallel_for(lines, [&](std::size_t b, std::size_t e, int) {
    std::vector<int> idx;
    for (std::size_t l = b; l < e; ++l) {
      // Enumerate line starts: flat index with the axis entry 0.
      std::size_t hi = l / st[axis], lo = l % st[axis];
      std::size_t start = hi * st[axis] * n + lo;
      g.unflatten(start, idx);
      const double a = shift(idx);
      for (int k = 0; k < n; ++k) {
        Complex ph;
        if (k == n / 2) ph = std::cos(0.5 * n * dxi * a);
        else ph = std::polar(1.0, freq(k, n) * dxi * a);
        data[start + k * st[axis]] *= ph / static_cast<double>(n);
      }
    }
  });
  run_lines(g, data, axis, FFTW_BACKWARD);
}

void resample_axis(const BoxGrid& g, CVec& data, int axis, const std::vector<double>& points) {
  const int n = g.n[axis];
  if (static_cast<int>(points.size()) != n) throw InvalidParameter("resample_axis: one point per grid index");
  const double dxi = g.dxi(axis);
  // W(i, j): interpolant weight of sample j at points[i].
  std::vector<double> W(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double u = dxi * (points[i] - g.x(axis, j));
      double s = 1.0 + std::cos(0.5 * n * u);
      for (int k = 1; k < n / 2; ++k) s += 2.0 * std::cos(k * u);
      W[static_cast<std::size_t>(i) * n + j] = s / n;
    }
  const auto st = strides(g);
  const std::size_t lines = g.total() / n;
  parallel_for(lines, [&](std::size_t b, std::size_t e, int) {
    std::vector<Complex> in(n);
    for (std::size_t l = b; l < e; ++l) {
      std::size_t hi = l / st[axis], lo = l % st[axis];
      std::size_t start = hi * st[axis] * n + lo;
      for (int j = 0; j < n; ++j) in[j] = data[start + j * st[axis]];
      for (int i = 0; i < n; ++i) {
        Complex acc = 0.0;
        const double* w = &W[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) acc += w[j] * in[j];
        data[start + i * st[axis]] = acc;
      }
    }
  });
}

double boundary_fraction(const BoxGrid& g, const CVec& data) {
  double all = max_abs(data), edge = 0.0;
  if (all == 0.0) return 0.0;
  std::vector<int> idx;
  for (std::size_t f = 0; f < data.size(); ++f) {
    g.unflatten(f, idx);
    for (int a = 0; a < g.dim(); ++a)
      if (idx[a] == 0 || idx[a] == g.n[a] - 1) {
        edge = std::max(edge, std::abs(data[f]));
        break;
      }
  }
  return edge / all;
}

double max_abs(const CVec& data) {
  double m = 0.0;
  for (const auto& v : data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace phg
