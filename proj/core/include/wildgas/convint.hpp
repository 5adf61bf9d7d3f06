#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wildgas/ansatz.hpp"
#include "wildgas/grid.hpp"
#include "wildgas/heat.hpp"
#include "wildgas/state.hpp"
#include "wildgas/subsolution.hpp"

namespace wildgas {

/// Everything that stays fixed while the velocity is iterated.
struct Problem {
  Ansatz ansatz;
  ScalarField theta0;
  EnergyProfile chi;
  HeatOptions heat;
};

/// A subsolution together with its temperature and energy budget e-bar[v].
struct Iterate {
  SubsolutionState state;
  TemperatureSolve theta;
  std::vector<ScalarField> ebar;
};

Iterate evaluate(const Problem& problem, SubsolutionState state);

struct ConvintOptions {
  /// Carrier wavenumber of the waves; 0 picks n_space / 4.
  int frequency = 0;
  /// Fraction of the largest admissible amplitude actually used.
  double safety = 0.9;
  /// delta = min(delta_fraction * inf gap, alpha / (2 (T - eps) |Omega|)).
  double delta_fraction = 0.1;
  int max_boxes = 4096;
  /// Smallest box side in grid points; bounds the refinement.
  int min_box_points = 8;
  /// Smallest number of time samples inside a box window.
  int min_window_samples = 4;
  /// Amplitude halvings tried when the re-solved state fails verification.
  int max_retries = 6;
  std::uint64_t seed = 0;
};

/// Largest eps such that moving (rho~, V) by less than eps changes both
/// (d/2) lambda_max((v+V)(x)(v+V)/rho - U) and |v+V|^2/(2 rho) by less than
/// delta/4 on the states with (d/2) lambda_max(...) <= e_sup. Infinite when
/// the coefficients do not oscillate (rho_lo == rho_hi and v_osc == 0).
double epsilon_for_delta(double delta, double e_sup, double rho_lo, double rho_hi, double v_osc, int dim);

/// Space-time cell: time interval [t1, t2] times the spatial cube `cell` of
/// the uniform m-refinement of the torus. m = 0 stands for the whole torus
/// without spatial cutoff (periodic plane waves).
struct Box {
  double t1 = 0.0;
  double t2 = 1.0;
  int m = 1;
  std::array<int, 3> cell{0, 0, 0};
  /// Plateau fraction of the time window (see TimeWindow).
  double flat = 0.0;

  bool contains(const SpaceGrid& g, std::size_t p) const;
};

struct FrozenCoefficients {
  double rho = 1.0;                 // sup rho~ over the box
  std::array<double, 3> v{0, 0, 0}; // mean of grad Psi over the box
};

struct BoxDecomposition {
  double t1 = 0.0;
  double t2 = 1.0;
  int m = 1;
  double eps_osc = 0.0;
  /// Aggregated Lipschitz constant: every box oscillation is <= lipschitz / m.
  double lipschitz = 0.0;
  bool fallback = false;
  std::vector<Box> boxes;
  std::vector<FrozenCoefficients> frozen;

  /// ceil(lipschitz / eps_osc)^{d+1}
  double box_bound(int dim) const;
};

/// Smallest uniform refinement m (boxes = m^{d+1}) of [t1, t2] x torus for
/// which osc(rho~) < eps and sup |grad Psi - mean| < eps on every box, sampled
/// at grid points and at the time samples in the box plus its end points.
/// Throws EpsilonTooSmall when m exceeds what the grid resolves or the box cap.
BoxDecomposition localize(const Ansatz& ansatz, double t1, double t2, double eps,
                          const ConvintOptions& options = {});

/// Finest refinement the grid allows on [t1, t2], ignoring the oscillation test.
BoxDecomposition finest_decomposition(const Ansatz& ansatz, double t1, double t2, const ConvintOptions& options = {});

/// State quantities on the time samples, ready for pointwise tests.
struct SampledFrame {
  SpaceGrid space;
  std::vector<double> times;
  std::vector<VectorField> w;       // v + grad Psi
  std::vector<SymTensorField> u;
  std::vector<ScalarField> rho;
  std::vector<ScalarField> e;
};

SampledFrame sample_frame(const SubsolutionState& s, const Ansatz& ansatz, const std::vector<ScalarField>& e);

/// Amplitude direction a, unit wave direction xi (orthogonal to a) and
/// carrier frequency N: the carrier is sin(2 pi N xi.x + phase). On a whole-
/// torus box N xi must be an integer vector.
struct WaveOrientation {
  std::array<double, 3> a{1, 0, 0};
  std::array<double, 3> xi{0, 1, 0};
  double frequency = 1.0;
};

/// Integer wave vector k as an orientation (xi = k/|k|, N = |k|, a orthogonal to k).
WaveOrientation lattice_orientation(const std::array<int, 3>& k, int dim);

/// Localized plane wave on one box. With a spatial potential G (smooth bump
/// times sin(2 pi N xi.x + phase)) and unit a orthogonal to xi:
///   w_x = Delta^2 G a - grad(a.grad Delta G),
///   y_x = 2 grad grad (a.grad G) - (a (x) grad Delta G + grad Delta G (x) a),
/// so div w_x = 0, div y_x = -w_x and y_x is trace-free (both traces equal
/// 2 a.grad Delta G). The correction is
/// (eta(t) w_x, eta'(t) y_x) with the time bump of the box.
struct WavePerturbation {
  Box box;
  WaveOrientation orientation;
  double phase = 0.0;
  double amplitude = 0.0;
  WaveGroup group;
  /// int int |w|^2 over the window (trapezoid in time).
  double energy = 0.0;
  /// Predicted change of the energy defect integral.
  double gain = 0.0;
  /// max over |k|_inf <= 2 of |<w_x, exp(2 pi i k.x)>| times max eta.
  double weak_pairing = 0.0;
};

/// Unit-amplitude wave fields for one box (amplitude applied by the caller).
WaveGroup wave_fields(const SpaceGrid& grid, const Box& box, const WaveOrientation& orientation, double phase);

/// Picks the orientation and amplitude (bisection on the convex constraint,
/// then `safety`) maximizing the gain while (d/2) lambda_max(...) < e holds at
/// every box point and every frame time inside the window. Without explicit
/// candidates, axis and diagonal directions at frequency options.frequency
/// are tried. Throws NoAdmissibleAmplitude.
WavePerturbation perturb_box(const SampledFrame& frame, const Box& box, const FrozenCoefficients& frozen,
                             const ConvintOptions& options = {}, double phase = 0.0,
                             const std::vector<WaveOrientation>& candidates = {});

struct GainRecord {
  int step = 0;
  double eps = 0.0;
  double delta = 0.0;
  double alpha = 0.0;       // -I_eps before the step
  double alpha_e = 0.0;     // -int int (|W|^2/(2 rho~) - e), trapezoid in time
  double gain = 0.0;        // int int |w_n|^2
  double lambda_hat = 0.0;  // gain / int int (e - |W|^2/(2 rho~))^2
  double beta_hat = 0.0;    // I_eps after - I_eps before
  double jensen_floor = 0.0;
  double i_eps = 0.0;       // after the step
  double inf_gap = 0.0;     // after the step, over all samples
  int boxes = 0;
  int accepted = 0;
  int retries = 0;
  bool fallback = false;
};

struct GainLedger {
  std::vector<GainRecord> records;
  void write_csv(const std::string& path) const;
};

struct StepResult {
  Iterate next;
  GainRecord record;
  GapReport gap;
  std::vector<WavePerturbation> accepted;
};

/// One energy-raising step on [eps, T]: e = e-bar[v] - delta there, every box
/// perturbed, theta re-solved for the new v and membership re-verified with
/// the recomputed e-bar. Requires I_eps[v] < -alpha < 0 (PreconditionFailed).
/// Throws StepStalled when no box admits a wave or every retry fails.
StepResult pw1_step(const Problem& problem, const Iterate& current, double eps, double alpha,
                    const ConvintOptions& options = {}, int step_index = 0);

struct Schedule {
  double eps = 0.1;
  int max_steps = 10;
  double stop_tolerance = 1e-8;
};

struct IterateResult {
  std::vector<Iterate> trajectory;  // initial state first
  std::vector<double> i_eps;        // per state
  GainLedger ledger;
  double final_defect = 0.0;        // |I_eps| of the last state
  double gap_min = 0.0;
  double gap_mean = 0.0;
  bool stalled = false;
  std::string stall_reason;
};

/// Repeats pw1_step with alpha = |I_eps| / 2 until |I_eps| < stop_tolerance,
/// the budget is spent, or a step stalls.
IterateResult iterate(const Problem& problem, const Iterate& initial, const Schedule& schedule,
                      const ConvintOptions& options = {});

}  // namespace wildgas
