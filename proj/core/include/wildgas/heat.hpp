#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wildgas/ansatz.hpp"
#include "wildgas/grid.hpp"
#include "wildgas/state.hpp"

namespace wildgas {

/// Extra forcing S(t,x) added to the right-hand side of the internal-energy
/// equation; used for manufactured solutions.
using HeatSource = std::function<ScalarField(double t)>;

struct HeatOptions {
  /// Bound on dt * (explicit advection/reaction rate).
  double stability_ratio = 0.4;
  /// Substeps per shortest time scale of the velocity history.
  int steps_per_window = 16;
  int min_substeps = 1;
  /// Refuse solves needing more steps than this (StepFailure).
  long max_steps = 2'000'000;
  /// L2 space-time residual expected on resolved problems.
  double tolerance = 1e-6;
  HeatSource source;
};

struct ComparisonBounds {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  double f_bar = 0.0;
  double z_min0 = 0.0;
  double z_max0 = 0.0;
};

struct HeatTraceRow {
  double t;
  double theta_min;
  double theta_max;
};

struct TemperatureSolve {
  GridSpec grid;
  std::vector<ScalarField> theta;  // one per time sample
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  long steps = 0;
  double dt = 0.0;
  double max_ratio = 0.0;
  std::vector<HeatTraceRow> trace;
};

/// Solves (3/2)(rho~ d_t theta + W.grad theta) = Delta theta - theta Delta Psi
///        + theta (grad rho~ / rho~).W,  W = v + grad Psi,  theta(0) = theta0.
///
/// Exponential time differencing (ETDRK4): gamma * Delta with the largest
/// diffusivity gamma = 2 / (3 min rho~) is integrated exactly in Fourier
/// space, the remainder (2/(3 rho~) - gamma) Delta theta plus advection and
/// reaction is explicit and 2/3-dealiased. The step is constant and chosen so
/// that dt * (advective + reactive rate) <= stability_ratio.
///
/// Throws NonPositiveInitial, StepFailure (positivity lost or non-finite).
TemperatureSolve solve_theta(const VelocityHistory& v, const Ansatz& ansatz, const ScalarField& theta0,
                             const HeatOptions& options = {});

/// v-independent bounds from constant super/sub-solutions of the equation for
/// Z = log(theta^{3/2} / rho~):
///   Z_lo(t) = min Z0 - (2 F/rho_lower) t,  Z_hi(t) = max Z0 + (2 F/rho_lower) t,
///   F = sup |(2/3) Delta log rho~ + (4/9) |grad log rho~|^2|,
/// then theta = (rho~ e^Z)^{2/3} with the extreme values of rho~.
ComparisonBounds comparison_bounds(const Ansatz& ansatz, const ScalarField& theta0);

struct HeatResiduals {
  /// L2 space-time norm of the internal-energy residual.
  double internal_energy = 0.0;
  /// L2 space-time norm of the entropy-form residual.
  double entropy = 0.0;
  /// L2 norm of (entropy residual - internal-energy residual / theta).
  double equivalence_gap = 0.0;
  /// Per-sample max-norm of the internal-energy residual.
  std::vector<double> per_sample;
};

/// Evaluates both forms of the temperature equation on the stored samples;
/// time derivatives use fourth-order finite differences (n_time >= 5).
HeatResiduals heat_residuals(const TemperatureSolve& solve, const VelocityHistory& v, const Ansatz& ansatz,
                             const HeatSource& source = {});

/// L2 entropy-equation residual.
double entropy_residual(const TemperatureSolve& solve, const VelocityHistory& v, const Ansatz& ansatz,
                        const HeatSource& source = {});

/// max_t |int (3/2) rho~ theta (t) - int (3/2) rho~ theta (0) - int_0^t int theta(-Delta Psi + W.grad log rho~)|
/// relative to int (3/2) rho~ theta (0). Requires div v = 0; a source adds int S.
double internal_energy_budget_defect(const TemperatureSolve& solve, const VelocityHistory& v,
                                     const Ansatz& ansatz, const HeatSource& source = {});

/// CSV trace: t, min theta, max theta, residual.
void write_heat_trace(const std::string& path, const TemperatureSolve& solve,
                      const std::vector<double>& residual_per_sample);

}  // namespace wildgas
