#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wildgas/ansatz.hpp"
#include "wildgas/convint.hpp"
#include "wildgas/grid.hpp"
#include "wildgas/heat.hpp"
#include "wildgas/presets.hpp"
#include "wildgas/state.hpp"

namespace wildgas {

/// chi0 = (1 + margin) sup [(d/2)|v0|^2 / rho0 + (3/2) rho0 theta0].
double choose_chi0(const VectorField& v0, const ScalarField& rho0, const ScalarField& theta0, double margin = 0.1);

/// Energy profile rising linearly from chi0 at t = 0 to chi_bar at the peak
/// time T - (chi_bar - chi0) / (2K), then falling with slope -2K back to chi0
/// at T. Hence chi(0) = chi(T) = chi0, chi0 < chi < chi_bar inside, and for
/// every tau at or after the peak chi(t) < chi(tau) - K (t - tau) on (tau, T].
struct ChiProfile {
  double chi0 = 0.0;
  double chi_bar = 0.0;
  double k = 0.0;
  double peak = 0.0;
  double t_final = 1.0;

  double operator()(double t) const;
  double slope(double t) const;
};

/// Throws InvalidArgument unless chi_bar > 2 chi0 > 0, K > 0, T > 0;
/// InfeasibleProfile when the descent cannot fit (peak time <= 0).
ChiProfile build_chi(double chi0, double chi_bar, double k, double t_final);

/// Time-dependent constraint field e(t, x).
using BudgetField = std::function<ScalarField(double t)>;

struct RecursionOptions {
  /// Target time and initial window half-width.
  double tau = 0.5;
  double eps0 = 0.1;
  /// Time samples per window (even); the centre is always a sample.
  int samples_per_window = 64;
  /// Plateau fraction of every window. Above 1/2 the next window (half-width
  /// below eps/2) sits where the previous level is constant in time.
  double plateau = 0.5;
  int max_halvings = 24;
  /// Amplitude halvings allowed to meet the weak-closeness bounds.
  int max_shrinks = 16;
  /// Minimal sup-norm separation of the wave vectors used at different levels.
  int wave_separation = 5;
  double safety = 0.9;
  /// Points for the composite Simpson rule of the window integral (odd).
  int quadrature_points = 257;
  std::uint64_t seed = 0;
};

struct RecursionLevel {
  int k = 0;
  double tau = 0.0;
  double eps = 0.0;
  double alpha = 0.0;       // int over the window of int (e - |w|^2/(2 rho0)) before the level
  double lambda_hat = 0.0;  // measured gain constant (Lambda / 16)
  double kinetic = 0.0;     // int |w_k(tau_k)|^2 / (2 rho0)
  double defect = 0.0;      // int (e(tau_k) - |w_k(tau_k)|^2 / (2 rho0))
  double metric_step = 0.0; // d(w_k, w_{k-1})
  double pairing = 0.0;     // max_{m<k} sup_t |int (w_k - w_{k-1}).w_m / rho0|
  std::array<int, 3> wave_vector{0, 0, 0};
  double amplitude = 0.0;
  int halvings = 0;
};

struct RecursionResult {
  std::vector<SubsolutionState> levels;  // w_0 = v0, ..., w_depth
  std::vector<RecursionLevel> ledger;    // row k describes w_k
  double tau_bar = 0.0;

  const SubsolutionState& final_state() const { return levels.back(); }
};

/// Integer wave vectors with |k|_inf in [separation, n/3], pairwise (up to
/// sign) at sup-distance >= separation, ordered by |k|.
std::vector<std::array<int, 3>> separated_wave_vectors(const SpaceGrid& grid, int separation);

/// Staircase construction: level k adds a periodic plane wave, modulated by a
/// flat-top time bump on (tau_{k-1} - eps_k, tau_{k-1} + eps_k), to w_{k-1}. eps_k
/// starts at 0.99 eps_{k-1}/2 and is halved until, with the measured gain
/// constant, the window mean/max inequalities hold and the defect at the new
/// peak tau_k (argmax of the kinetic energy) drops. Each level also keeps
/// d(w_k, w_{k-1}) < 2^-k and the pairings with all earlier levels below 2^-k.
///
/// Throws NotSolenoidal, PreconditionFailed (v0 not strictly below e on
/// [0, T]), StallAtLevel.
RecursionResult lemma_a2_recursion(const VectorField& v0, const ScalarField& rho0, const BudgetField& e,
                                   double t_final, int depth, const RecursionOptions& options = {});

/// CSV: k, tau, eps, alpha, kinetic, defect, lambda_hat, metric_step, pairing.
void write_staircase_csv(const std::string& path, const std::vector<RecursionLevel>& ledger);

/// Time after which the dissipative budget stops decreasing: (chi_tau - chi0) / K.
double dissipative_knee(double chi_tau, double chi0, double k);

/// e(t) = chi_tau - (3/2) rho0 theta0 - K t up to the knee, then chi0 - (3/2) rho0 theta0.
ScalarField dissipative_budget(double t, double chi_tau, double chi0, double k, const ScalarField& rho0,
                               const ScalarField& theta0);

struct AdmissibilityReport {
  bool passed = false;
  /// min over samples t > 0 of chi_tau - (3/2) rho0 theta[w] - e.
  double margin = 0.0;
  double t_worst = 0.0;
  std::size_t p_worst = 0;
  /// max |theta - theta0| / ((1 + |w|_inf) t)
  double c_hat = 0.0;
  /// max (3/2) rho0 (theta - theta0) / t: the smallest slope that passes.
  double k_min = 0.0;
  double k = 0.0;
  /// min over samples t > 0 of chi_tau - (3/2) rho0 theta - (d/2) lambda_max(w(x)w/rho0 - U).
  double gap_min = 0.0;
};

/// Checks e < chi_tau - (3/2) rho0 theta[w] at every sample t > 0 of the solve.
AdmissibilityReport admissibility_check(const SubsolutionState& w, const TemperatureSolve& theta,
                                        const ScalarField& rho0, const ScalarField& theta0, double chi_tau,
                                        double chi0, double k);

/// Throws AdmissibilityFailed (with the slope that would pass) unless passed.
void require_admissible(const AdmissibilityReport& report);

/// max_j |int (|w_j|^2 / (2 rho0) + (3/2) rho0 theta_j) - chi(t_j)|.
double energy_identity(const std::vector<double>& times, const std::vector<VectorField>& w,
                       const ScalarField& rho0, const std::vector<ScalarField>& theta,
                       const std::function<double(double)>& chi);

/// Velocity with |v|^2 / (2 rho0) = chi(t_j) - (3/2) rho0 theta_j pointwise,
/// pointing along `direction`. Throws PreconditionFailed where the right side
/// is negative.
std::vector<VectorField> saturated_velocity(const std::vector<double>& times, const ScalarField& rho0,
                                            const std::vector<ScalarField>& theta,
                                            const std::function<double(double)>& chi,
                                            const std::array<double, 3>& direction);

struct DissipativeConfig {
  int dim = 2;
  int n_space = 32;
  std::string preset = "shear";
  /// Initial data used instead of the preset when set.
  std::optional<InitialData> data;
  double t_final = 0.2;
  int depth = 6;
  /// Target time of the staircase; 0 selects peak + (T - peak) / 4. The first
  /// window half-width is 0.8 min(tau - peak, T - tau).
  double tau = 0.0;
  double margin = 0.1;
  /// 0 selects max(2.5 chi0, 4 sup (3/2) rho0 theta_bar).
  double chi_bar = 0.0;
  /// 0 selects the slope automatically.
  double k = 0.0;
  int max_k_rounds = 6;
  /// Time samples of the admissibility check after the shift.
  int n_time = 65;
  RecursionOptions recursion;
  HeatOptions heat;
};

struct DissipativeResult {
  double chi0 = 0.0;
  double chi_bar = 0.0;
  double theta_bar = 0.0;
  ChiProfile profile;
  RecursionResult recursion;
  double tau_bar = 0.0;
  double chi_tau = 0.0;
  int k_rounds = 0;
  AdmissibilityReport admissibility;
  /// Same state and temperature checked against the slope K / 100.
  AdmissibilityReport forced;
  Ansatz ansatz;
  /// Final state read from tau_bar on (set on success).
  std::optional<SubsolutionState> shifted;
  TemperatureSolve theta;
  /// max |E(t) - chi_tau| of the constructed finite-depth state.
  double energy_defect = 0.0;
  /// Same for the saturated synthetic target.
  double saturated_defect = 0.0;
};

/// Full dissipative-data pipeline on a preset with divergence-free momentum.
/// Throws InvalidArgument (tau outside (peak, T)), NotSolenoidal, InfeasibleProfile,
/// StallAtLevel, AdmissibilityFailed.
DissipativeResult build_dissipative_data(const DissipativeConfig& config);

}  // namespace wildgas
