#include "wildgas/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "wildgas/errors.hpp"

namespace wildgas {

namespace {

// First node of the interpolation stencil used on panel k.
int stencil_start(int k, int n, int width) { return std::clamp(k - 1, 0, std::max(0, n - width)); }

double lagrange(const std::vector<double>& f, int first, int width, double s) {
  double r = 0.0;
  for (int i = 0; i < width; ++i) {
    double l = 1.0;
    for (int j = 0; j < width; ++j)
      if (j != i) l *= (s - (first + j)) / static_cast<double>(i - j);
    r += l * f[first + i];
  }
  return r;
}

// Integral from 0 to x (in units of dt) of the interpolant.
double primitive(const std::vector<double>& f, double x) {
  const int n = static_cast<int>(f.size());
  const int width = std::min(n, 4);
  static const double node[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double weight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double acc = 0.0;
  for (int k = 0; k + 1 < n && k < x; ++k) {
    const double hi = std::min(x, k + 1.0);
    const double mid = 0.5 * (k + hi), half = 0.5 * (hi - k);
    const int first = stencil_start(k, n, width);
    for (int q = 0; q < 3; ++q) acc += weight[q] * half * lagrange(f, first, width, mid + half * node[q]);
  }
  return acc;
}

}  // namespace

double sample_integral(const std::vector<double>& f, double dt, double a, double b) {
  if (f.size() < 2) throw InvalidArgument("integration needs at least two samples");
  const double end = (f.size() - 1) * dt;
  if (a < -1e-12 * end || b > end * (1 + 1e-12) || a > b) throw InvalidArgument("integration range outside samples");
  a = std::clamp(a, 0.0, end);
  b = std::clamp(b, 0.0, end);
  return dt * (primitive(f, b / dt) - primitive(f, a / dt));
}

double sample_interpolate(const std::vector<double>& f, double dt, double t) {
  const int n = static_cast<int>(f.size());
  if (n < 1) throw InvalidArgument("no samples");
  const double s = std::clamp(t / dt, 0.0, n - 1.0);
  const int k = std::min(static_cast<int>(s), std::max(0, n - 2));
  const int width = std::min(n, 4);
  return lagrange(f, stencil_start(k, n, width), width, s);
}

std::vector<double> linear_weights(int n, double dt, double a, double b) {
  std::vector<double> times(std::max(n, 0));
  for (int k = 0; k < n; ++k) times[k] = k * dt;
  return linear_weights(times, a, b);
}

std::vector<double> linear_weights(const std::vector<double>& times, double a, double b) {
  const std::size_t n = times.size();
  if (n < 2) throw InvalidArgument("integration needs at least two samples");
  std::vector<double> q(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double lo = std::max(a, times[k]), hi = std::min(b, times[k + 1]);
    if (hi <= lo) continue;
    const double s_mid = (0.5 * (lo + hi) - times[k]) / (times[k + 1] - times[k]);
    q[k] += (hi - lo) * (1.0 - s_mid);
    q[k + 1] += (hi - lo) * s_mid;
  }
  return q;
}

}  // namespace wildgas
