#include "wildgas/presets.hpp"

#include <cmath>

#include "wildgas/errors.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

constexpr double kTwoPi = 2.0 * Spectral::kPi;

double last(const std::vector<double>& x) { return x.back(); }

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"equilibrium", "analytic", "generic", "shear"};
  return names;
}

InitialData make_preset(const std::string& name, const SpaceGrid& grid) {
  grid.validate();
  InitialData d{ScalarField(grid, 1.0), ScalarField(grid, 1.0), VectorField(grid)};
  if (name == "equilibrium") return d;

  if (name == "analytic") {
    d.rho0 = sample(grid, [](const auto& x) { return 2.0 + std::cos(kTwoPi * x[0]); });
    d.theta0 = sample(grid, [](const auto& x) { return 1.0 + 0.25 * std::cos(kTwoPi * x[1]); });
    d.u0.set_component(0, sample(grid, [](const auto& x) { return std::sin(kTwoPi * x[0]); }));
    return d;
  }

  const auto rho = [](const auto& x) {
    return 2.0 + 0.3 * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]) +
           0.2 * std::cos(kTwoPi * (x[0] + last(x)));
  };
  const auto theta = [](const auto& x) {
    return 1.0 + 0.3 * std::sin(kTwoPi * x[0] + 1.0) * std::cos(kTwoPi * x[1]) +
           0.1 * std::cos(kTwoPi * (x[1] - last(x)));
  };
  d.rho0 = sample(grid, rho);
  d.theta0 = sample(grid, theta);

  if (name == "generic") {
    d.u0.set_component(0, sample(grid, [](const auto& x) {
      return 0.5 * std::sin(kTwoPi * x[1]) + 0.3 * std::cos(kTwoPi * x[0]);
    }));
    d.u0.set_component(1, sample(grid, [](const auto& x) {
      return 0.4 * std::cos(kTwoPi * x[0]) - 0.2 * std::sin(kTwoPi * x[1]);
    }));
    if (grid.dim == 3) {
      d.u0.set_component(2, sample(grid, [](const auto& x) { return 0.2 * std::sin(kTwoPi * x[0]); }));
    }
    return d;
  }

  if (name == "shear") {
    // rho0 u0 = m with div m = 0: m = (0.4 sin 2pi x2, 0.3 sin 2pi x1 [, 0])
    const auto m0 = sample(grid, [](const auto& x) { return 0.4 * std::sin(kTwoPi * x[1]); });
    const auto m1 = sample(grid, [](const auto& x) { return 0.3 * std::sin(kTwoPi * x[0]); });
    for (std::size_t p = 0; p < grid.points(); ++p) {
      d.u0.comp[0][p] = m0[p] / d.rho0[p];
      d.u0.comp[1][p] = m1[p] / d.rho0[p];
    }
    return d;
  }

  throw InvalidArgument("unknown preset '" + name + "'");
}

ScalarField random_bandlimited(const SpaceGrid& grid, int kmax, double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& sp = Spectral::on(grid);
  Spectrum s(sp.modes());
  for (std::size_t m = 1; m < sp.modes(); ++m) {
    bool inside = true;
    for (int a = 0; a < grid.dim; ++a) {
      if (std::abs(sp.wavenumber(m, a)) > kmax || sp.nyquist(m, a)) inside = false;
    }
    if (inside) s[m] = {normal(rng), normal(rng)};
  }
  ScalarField f(grid);
  f.data = sp.backward(s);
  const double mu = mean(f);
  for (double& x : f.data) x -= mu;
  const double peak = max_abs(f);
  if (peak > 0.0)
    for (double& x : f.data) x *= amplitude / peak;
  return f;
}

VectorField random_bandlimited_vector(const SpaceGrid& grid, int kmax, double amplitude,
                                      std::mt19937_64& rng) {
  VectorField v(grid);
  for (int c = 0; c < grid.dim; ++c) v.set_component(c, random_bandlimited(grid, kmax, amplitude, rng));
  return v;
}

}  // namespace wildgas
