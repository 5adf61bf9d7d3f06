#pragma once

#include <array>
#include <vector>

#include "wildgas/grid.hpp"

namespace wildgas {

/// Gas trajectory sampled on the uniform time grid of `grid`; rho, theta > 0.
struct GasState {
  GridSpec grid;
  std::vector<ScalarField> rho;
  std::vector<ScalarField> theta;
  std::vector<VectorField> u;

  /// Throws GridMismatch for wrong sample counts, NonPositiveState for rho or theta <= 0.
  void validate() const;
};

/// Time-independent trajectory (every sample equal to the given fields).
GasState constant_state(const GridSpec& grid, const ScalarField& rho, const ScalarField& theta, const VectorField& u);

// Perfect monoatomic gas with unit gas constant and conductivity.
double pressure(double rho, double theta);                        // rho theta
double internal_energy(double theta);                             // (3/2) theta
double entropy(double rho, double theta);                         // log(theta^{3/2} / rho)
/// rho ((3/2) theta - Theta log(theta^{3/2} / rho))
double ballistic_free_energy(double rho, double theta, double big_theta);
/// d/d rho of the above: (3/2) theta - Theta log(theta^{3/2} / rho) + Theta.
double ballistic_free_energy_drho(double rho, double theta, double big_theta);

struct Constitutive {
  ScalarField p;
  ScalarField e;
  ScalarField s;
};

/// Throws NonPositiveState.
Constitutive constitutive(const ScalarField& rho, const ScalarField& theta);

/// Test function zeta_m(t) * mode(x): zeta_m(t) = (1 - t/T)^3 (t/T)^m and
/// mode = cos(2 pi k.x) or sin(2 pi k.x); for the nonnegative family used in
/// the entropy inequality, 1 + cos or 1 + sin. Momentum tests point along
/// `axis`.
struct TestFunction {
  std::array<int, 3> k{0, 0, 0};
  bool sine = false;
  int power = 0;
  int axis = 0;
  bool shifted = false;
};

/// Fixed dictionary: k = 0 and every k with |k|_inf <= kmax in a half-space,
/// cos and sin, powers 0 and 1. Momentum tests repeat the list per axis.
std::vector<TestFunction> test_family(int dim, int kmax = 2, bool momentum = false, bool nonnegative = false);

struct WeakResiduals {
  std::vector<TestFunction> scalar_tests;
  std::vector<TestFunction> vector_tests;
  std::vector<double> mass;
  std::vector<double> momentum;
  std::vector<double> energy;
  double max_mass = 0.0;
  double max_momentum = 0.0;
  double max_energy = 0.0;
};

/// Defects of the three weak identities including the initial pairing,
/// (left side) + (initial term), spatial integrals at grid resolution and
/// piecewise-cubic time quadrature.
WeakResiduals weak_residuals(const GasState& s, int kmax = 2);

struct EnergyAudit {
  std::vector<double> energy;  // int rho (|u|^2 / 2 + e) per sample
  double defect = 0.0;         // max |E(t) - E(0)|
};

EnergyAudit total_energy(const GasState& s);

struct EntropyAudit {
  std::vector<TestFunction> tests;
  /// Entropy production tested against nonnegative phi: weak left side
  /// minus int int |grad theta|^2 / theta^2 phi. Admissible states give >= -tol.
  std::vector<double> production;
  double min_production = 0.0;
};

EntropyAudit entropy_inequality_residual(const GasState& s, int kmax = 2);

struct RelEntropyReport {
  std::vector<double> times;
  std::vector<double> value;        // relative entropy per sample
  std::vector<double> dissipation;  // int_0^t int Theta |grad theta|^2 / theta^2
  /// Right-side integrals up to each sample: momentum, entropy transport,
  /// pressure and heat-flux terms.
  std::vector<double> momentum_term;
  std::vector<double> entropy_term;
  std::vector<double> pressure_term;
  std::vector<double> flux_term;
  /// right side - left side per sample; >= -tol for dissipative states.
  std::vector<double> defect;
};

/// Relative entropy between a state and a smooth positive reference, per sample.
std::vector<double> rel_entropy(const GasState& s, const GasState& ref);

/// Both sides of the relative entropy inequality for every sample time tau.
/// Time derivatives of the reference use fourth-order differences.
RelEntropyReport rel_entropy_inequality_residual(const GasState& s, const GasState& ref);

struct ClassicalOptions {
  double cfl = 0.2;
  /// Largest spectral tail fraction tolerated at every sample.
  double tail_tolerance = 1e-6;
  long max_steps = 2'000'000;
};

/// Smooth solution of the full system on [0, t_short] in conservative
/// variables (rho, rho u, total energy), pseudo-spectral with 2/3
/// dealiasing and classical RK4 at a fixed CFL-limited step. n_time samples.
/// Throws NonPositiveState, BlowupSuspected (tail monitor or non-finite values).
GasState classical_solve(const ScalarField& rho0, const ScalarField& theta0, const VectorField& u0, double t_short,
                         int n_time, const ClassicalOptions& options = {});

struct WeakStrongReport {
  std::vector<double> times;
  std::vector<double> value;
  double initial = 0.0;
  double max_value = 0.0;
  /// max_t value(t) / value(0) when value(0) > 0, else 0.
  double growth = 0.0;
};

/// Relative entropy of `weak` against the reference trajectory over time.
WeakStrongReport weak_strong_monitor(const GasState& weak, const GasState& ref);

}  // namespace wildgas
