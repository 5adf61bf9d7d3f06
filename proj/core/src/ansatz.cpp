#include "wildgas/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wildgas/errors.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

constexpr double kPi = Spectral::kPi;

VectorField momentum(const ScalarField& rho0, const VectorField& u0) {
  VectorField m = u0;
  for (auto& c : m.comp)
    for (std::size_t p = 0; p < c.size(); ++p) c[p] *= rho0[p];
  return m;
}

}  // namespace

double TimeProfile::value(double t) const {
  return t_final / (k * kPi) * std::sin(k * kPi * t / t_final);
}
double TimeProfile::d1(double t) const { return std::cos(k * kPi * t / t_final); }
double TimeProfile::d2(double t) const {
  return -(k * kPi / t_final) * std::sin(k * kPi * t / t_final);
}
double TimeProfile::min_value() const { return k >= 2 ? -t_final / (k * kPi) : 0.0; }
double TimeProfile::max_value() const { return t_final / (k * kPi); }

TimeProfile build_h(double t_final, const ScalarField& rho0, const VectorField& u0, double rho_lower) {
  if (!(rho_lower > 0.0)) throw InvalidArgument("rho_lower must be positive");
  if (min_value(rho0) < rho_lower) throw PositivityViolated("rho0 drops below rho_lower");
  const double dmax = max_abs(divergence(momentum(rho0, u0)));
  TimeProfile h{t_final, 1};
  while (t_final / (h.k * kPi) * dmax >= 0.5 * rho_lower) ++h.k;
  return h;
}

Ansatz build_ansatz(const GridSpec& grid, const ScalarField& rho0, const VectorField& u0,
                    std::optional<double> rho_lower) {
  grid.validate();
  require_same_grid(rho0.grid, grid.space());
  require_same_grid(u0.grid, grid.space());
  if (min_value(rho0) <= 0.0) throw PositivityViolated("rho0 must be positive");

  Ansatz a;
  a.grid = grid;
  a.rho0 = rho0;
  a.u0 = u0;
  a.rho_lower = rho_lower.value_or(min_value(rho0));
  a.h = build_h(grid.t_final, rho0, u0, a.rho_lower);

  const VectorField m0 = momentum(rho0, u0);
  a.div_m0 = divergence(m0);
  // The divergence has no constant mode; tolerate round-off in the mean.
  a.psi0 = poisson_solve(a.div_m0, 1e-8);
  a.grad_psi0 = gradient(a.psi0);
  a.grad_rho0 = gradient(rho0);
  a.grad_div_m0 = gradient(a.div_m0);
  a.v0 = helmholtz_decompose(m0).solenoidal;

  const double floor = 0.5 * a.rho_lower;
  a.rho_tilde.reserve(grid.n_time);
  a.psi.reserve(grid.n_time);
  for (int j = 0; j < grid.n_time; ++j) {
    const double t = grid.time(j);
    ScalarField r = a.rho_tilde_at(t);
    if (min_value(r) <= floor) {
      throw PositivityViolated("rho~ <= rho_lower/2 at t = " + std::to_string(t));
    }
    a.rho_tilde.push_back(std::move(r));
    a.psi.push_back(a.h.d1(t) * a.psi0);
  }
  return a;
}

ScalarField Ansatz::rho_tilde_at(double t) const {
  ScalarField r = rho0;
  const double ht = h.value(t);
  for (std::size_t p = 0; p < r.size(); ++p) r[p] -= ht * div_m0[p];
  return r;
}

VectorField Ansatz::grad_rho_tilde_at(double t) const {
  VectorField g = grad_rho0;
  axpy(-h.value(t), grad_div_m0, g);
  return g;
}

ScalarField Ansatz::dt_rho_tilde_at(double t) const { return -h.d1(t) * div_m0; }
ScalarField Ansatz::lap_psi_at(double t) const { return h.d1(t) * div_m0; }
ScalarField Ansatz::dt_psi_at(double t) const { return h.d2(t) * psi0; }
VectorField Ansatz::grad_psi_at(double t) const { return h.d1(t) * grad_psi0; }

double Ansatz::rho_tilde_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < rho0.size(); ++p) {
    m = std::min({m, rho0[p] - h.max_value() * div_m0[p], rho0[p] - h.min_value() * div_m0[p]});
  }
  return m;
}

double Ansatz::rho_tilde_max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < rho0.size(); ++p) {
    m = std::max({m, rho0[p] - h.max_value() * div_m0[p], rho0[p] - h.min_value() * div_m0[p]});
  }
  return m;
}

double continuity_residual(const Ansatz& a) {
  double worst = 0.0;
  for (int j = 0; j < a.grid.n_time; ++j) {
    const double t = a.grid.time(j);
    const ScalarField lap = laplacian(a.psi[j]);
    const ScalarField dt_rho = a.dt_rho_tilde_at(t);
    for (std::size_t p = 0; p < lap.size(); ++p) worst = std::max(worst, std::abs(dt_rho[p] + lap[p]));
  }
  return worst;
}

}  // namespace wildgas
