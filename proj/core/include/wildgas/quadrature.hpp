#pragma once

#include <vector>

namespace wildgas {

/// Integral over [a, b] of the piecewise-cubic interpolant through uniform
/// samples f_j = f(j dt). Each panel [t_k, t_{k+1}] uses the four nearest
/// nodes, so the rule is exact for cubics and fourth-order accurate. Fewer
/// than four samples lower the degree accordingly.
double sample_integral(const std::vector<double>& f, double dt, double a, double b);

/// Same interpolant evaluated at t.
double sample_interpolate(const std::vector<double>& f, double dt, double t);

/// Nonnegative weights q_j with sum_j q_j f_j = integral over [a, b] of the
/// piecewise-linear interpolant of n uniform samples.
std::vector<double> linear_weights(int n, double dt, double a, double b);

/// Same for sorted, possibly nonuniform sample times.
std::vector<double> linear_weights(const std::vector<double>& times, double a, double b);

/// Fourth-order first derivative at sample j of n >= 5 uniform samples f(i),
/// central inside and one-sided at the two ends of either boundary.
template <class Get>
double sample_derivative(Get f, int j, int n, double dt) {
  if (j >= 2 && j <= n - 3) return (-f(j + 2) + 8.0 * f(j + 1) - 8.0 * f(j - 1) + f(j - 2)) / (12.0 * dt);
  if (j == 0) return (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * dt);
  if (j == 1) return (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / (12.0 * dt);
  if (j == n - 1)
    return (25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) - 16.0 * f(n - 4) + 3.0 * f(n - 5)) / (12.0 * dt);
  return (3.0 * f(n - 1) + 10.0 * f(n - 2) - 18.0 * f(n - 3) + 6.0 * f(n - 4) - f(n - 5)) / (12.0 * dt);
}

}  // namespace wildgas
