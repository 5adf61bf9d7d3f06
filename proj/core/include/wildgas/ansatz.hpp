#pragma once

#include <optional>
#include <vector>

#include "wildgas/grid.hpp"
#include "wildgas/presets.hpp"

namespace wildgas {

/// h(t) = (T / (k pi)) sin(k pi t / T). Satisfies h(0) = h(T) = 0, h'(0) = 1.
struct TimeProfile {
  double t_final = 1.0;
  int k = 1;

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  /// Range of h over [0, T].
  double min_value() const;
  double max_value() const;
};

/// Smallest k >= 1 with (T / (k pi)) * sup|div(rho0 u0)| < rho_lower / 2.
TimeProfile build_h(double t_final, const ScalarField& rho0, const VectorField& u0, double rho_lower);

/// Prescribed-density reformulation: rho~(t,x) = rho0 - h(t) div(rho0 u0),
/// w = v + grad Psi with Delta Psi = h'(t) div(rho0 u0), Psi of zero mean.
/// All time dependence enters through h, so every quantity can be evaluated
/// at arbitrary t; the per-sample histories are kept for export and audits.
struct Ansatz {
  GridSpec grid;
  ScalarField rho0;
  VectorField u0;
  double rho_lower = 0.0;
  TimeProfile h;

  ScalarField div_m0;       // div(rho0 u0)
  ScalarField psi0;         // Delta^{-1} div(rho0 u0)
  VectorField grad_psi0;
  VectorField grad_rho0;
  VectorField grad_div_m0;
  VectorField v0;           // solenoidal part of rho0 u0

  std::vector<ScalarField> rho_tilde;  // per time sample
  std::vector<ScalarField> psi;        // per time sample

  ScalarField rho_tilde_at(double t) const;
  VectorField grad_rho_tilde_at(double t) const;
  ScalarField dt_rho_tilde_at(double t) const;
  ScalarField lap_psi_at(double t) const;
  ScalarField dt_psi_at(double t) const;
  VectorField grad_psi_at(double t) const;

  /// Exact extrema of rho~ over [0,T] x grid (h ranges over a known interval).
  double rho_tilde_min() const;
  double rho_tilde_max() const;
};

/// Throws PositivityViolated if rho~ <= rho_lower/2 at any sample.
/// `rho_lower` defaults to min rho0.
Ansatz build_ansatz(const GridSpec& grid, const ScalarField& rho0, const VectorField& u0,
                    std::optional<double> rho_lower = std::nullopt);

/// max over time samples of |d_t rho~ + Delta Psi|, with d_t rho~ from h'
/// and Delta Psi applied spectrally to the stored Psi samples.
double continuity_residual(const Ansatz& a);

}  // namespace wildgas
