#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wildgas/grid.hpp"

namespace wildgas {

/// Initial data (rho0, theta0, u0) on a space grid.
struct InitialData {
  ScalarField rho0;
  ScalarField theta0;
  VectorField u0;
};

/// Built-in analytic presets:
///   equilibrium  rho0 = theta0 = 1, u0 = 0
///   analytic     rho0 = 2 + cos(2 pi x1), u0 = (sin(2 pi x1), 0, ...), theta0 = 1 + cos(2 pi x2)/4
///   generic      smooth multi-mode data with div(rho0 u0) != 0
///   shear        generic rho0, theta0 and a divergence-free momentum rho0 u0
InitialData make_preset(const std::string& name, const SpaceGrid& grid);
const std::vector<std::string>& preset_names();

/// Samples f(x) on the grid.
template <typename F>
ScalarField sample(const SpaceGrid& grid, F f) {
  ScalarField r(grid);
  std::vector<double> x(grid.dim);
  for (std::size_t p = 0; p < r.size(); ++p) {
    for (int a = 0; a < grid.dim; ++a) x[a] = grid.coord(p, a);
    r[p] = f(x);
  }
  return r;
}

/// Random trigonometric polynomial with integer wavenumbers |k_j| <= kmax,
/// zero mean, scaled so that max |f| = amplitude.
ScalarField random_bandlimited(const SpaceGrid& grid, int kmax, double amplitude, std::mt19937_64& rng);
VectorField random_bandlimited_vector(const SpaceGrid& grid, int kmax, double amplitude,
                                      std::mt19937_64& rng);

}  // namespace wildgas
