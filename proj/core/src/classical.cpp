#include <algorithm>
#include <cmath>
#include <string>

#include "wildgas/errors.hpp"
#include "wildgas/relent.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

// Conservative variables: density, momentum, total energy density.
struct Conserved {
  ScalarField rho;
  VectorField m;
  ScalarField energy;
};

Conserved axpy_state(const Conserved& base, double s, const Conserved& k) {
  Conserved r = base;
  for (std::size_t p = 0; p < r.rho.size(); ++p) {
    r.rho[p] += s * k.rho[p];
    r.energy[p] += s * k.energy[p];
  }
  axpy(s, k.m, r.m);
  return r;
}

ScalarField temperature(const Conserved& c) {
  const int d = c.rho.grid.dim;
  ScalarField th(c.rho.grid);
  for (std::size_t p = 0; p < th.size(); ++p) {
    double mm = 0.0;
    for (int i = 0; i < d; ++i) mm += c.m.comp[i][p] * c.m.comp[i][p];
    th[p] = (c.energy[p] - 0.5 * mm / c.rho[p]) / (1.5 * c.rho[p]);
  }
  return th;
}

ScalarField ddx(const ScalarField& f, int axis) { return spectral_derivative(dealias(f), axis); }

Conserved rhs(const Conserved& c) {
  const SpaceGrid& g = c.rho.grid;
  const int d = g.dim;
  const std::size_t np = g.points();
  const ScalarField th = temperature(c);
  VectorField u(g);
  ScalarField p(g);
  for (std::size_t q = 0; q < np; ++q) {
    for (int i = 0; i < d; ++i) u.comp[i][q] = c.m.comp[i][q] / c.rho[q];
    p[q] = c.rho[q] * th[q];
  }
  Conserved r{ScalarField(g), VectorField(g), laplacian(th)};
  for (int l = 0; l < d; ++l) {
    r.rho = r.rho - ddx(c.m.component(l), l);
    ScalarField flux(g);
    for (std::size_t q = 0; q < np; ++q) flux[q] = (c.energy[q] + p[q]) * u.comp[l][q];
    r.energy = r.energy - ddx(flux, l);
  }
  for (int i = 0; i < d; ++i) {
    ScalarField acc = -1.0 * ddx(p, i);
    for (int l = 0; l < d; ++l) {
      ScalarField flux(g);
      for (std::size_t q = 0; q < np; ++q) flux[q] = c.m.comp[i][q] * u.comp[l][q];
      acc = acc - ddx(flux, l);
    }
    r.m.comp[i] = acc.data;
  }
  return r;
}

void require_positive(const ScalarField& rho, const ScalarField& th, double t) {
  const double lo = std::min(min_value(rho), min_value(th));
  if (!std::isfinite(lo) || !std::isfinite(max_value(rho)) || !std::isfinite(max_value(th)))
    throw BlowupSuspected("non-finite state at t = " + std::to_string(t));
  if (!(lo > 0.0)) throw NonPositiveState("density or temperature lost positivity at t = " + std::to_string(t));
}

}  // namespace

GasState classical_solve(const ScalarField& rho0, const ScalarField& theta0, const VectorField& u0, double t_short,
                         int n_time, const ClassicalOptions& o) {
  require_same_grid(rho0.grid, theta0.grid);
  require_same_grid(rho0.grid, u0.grid);
  if (!(t_short > 0.0)) throw InvalidArgument("t_short must be positive");
  if (n_time < 2) throw InvalidArgument("at least two time samples are needed");
  require_positive(rho0, theta0, 0.0);
  const SpaceGrid& g = rho0.grid;
  const int d = g.dim;
  const GridSpec grid{d, g.n, n_time, t_short};

  Conserved c{rho0, VectorField(g), ScalarField(g)};
  for (std::size_t q = 0; q < g.points(); ++q) {
    double uu = 0.0;
    for (int i = 0; i < d; ++i) {
      c.m.comp[i][q] = rho0[q] * u0.comp[i][q];
      uu += u0.comp[i][q] * u0.comp[i][q];
    }
    c.energy[q] = rho0[q] * (0.5 * uu + 1.5 * theta0[q]);
  }

  // Fixed step from the initial state: acoustic CFL and explicit diffusion.
  const double k_max = Spectral::kPi * g.n;
  const double speed = max_norm(u0) + std::sqrt(5.0 / 3.0 * max_value(theta0));
  const double dx = 1.0 / g.n;
  const double diffusivity = 2.0 / (3.0 * min_value(rho0));
  double dt = std::min(o.cfl * dx / speed, 2.0 * o.cfl / (diffusivity * d * k_max * k_max));
  const double sample_dt = grid.dt();
  const long substeps = std::max<long>(1, static_cast<long>(std::ceil(sample_dt / dt)));
  if (substeps * (n_time - 1) > o.max_steps)
    throw BlowupSuspected("classical solve needs more than " + std::to_string(o.max_steps) + " steps");
  dt = sample_dt / substeps;

  GasState out{grid, {}, {}, {}};
  auto record = [&](const Conserved& s, double t) {
    const ScalarField th = temperature(s);
    require_positive(s.rho, th, t);
    const double tail = std::max({spectral_tail_fraction(s.rho), spectral_tail_fraction(th),
                                  spectral_tail_fraction(s.energy)});
    if (tail > o.tail_tolerance)
      throw BlowupSuspected("spectral tail fraction " + std::to_string(tail) + " at t = " + std::to_string(t));
    VectorField u(g);
    for (int i = 0; i < d; ++i)
      for (std::size_t q = 0; q < g.points(); ++q) u.comp[i][q] = s.m.comp[i][q] / s.rho[q];
    out.rho.push_back(s.rho);
    out.theta.push_back(th);
    out.u.push_back(std::move(u));
  };

  record(c, 0.0);
  for (int j = 1; j < n_time; ++j) {
    for (long s = 0; s < substeps; ++s) {
      const Conserved k1 = rhs(c);
      const Conserved k2 = rhs(axpy_state(c, 0.5 * dt, k1));
      const Conserved k3 = rhs(axpy_state(c, 0.5 * dt, k2));
      const Conserved k4 = rhs(axpy_state(c, dt, k3));
      c = axpy_state(c, dt / 6.0, k1);
      c = axpy_state(c, dt / 3.0, k2);
      c = axpy_state(c, dt / 3.0, k3);
      c = axpy_state(c, dt / 6.0, k4);
    }
    record(c, grid.time(j));
  }
  return out;
}

}  // namespace wildgas
