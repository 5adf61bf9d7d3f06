#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wildgas/ansatz.hpp"
#include "wildgas/grid.hpp"
#include "wildgas/heat.hpp"
#include "wildgas/state.hpp"

namespace wildgas {

/// Symmetric d x d matrix, packed upper triangle in sym_index order.
struct SymMatrix {
  int dim = 3;
  std::array<double, 6> c{};

  double operator()(int i, int j) const { return c[sym_index(dim, i, j)]; }
  double& operator()(int i, int j) { return c[sym_index(dim, i, j)]; }
  double trace() const;
  double frobenius() const;
  /// w (x) w
  static SymMatrix outer(std::span<const double> w);
  /// Entry of a tensor field at grid point p.
  static SymMatrix at(const SymTensorField& f, std::size_t p);
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, const SymMatrix& a);

/// Largest eigenvalue of a trace-free symmetric matrix in closed form
/// (quadratic in 2D, trigonometric cubic in 3D).
/// Throws NotTraceFree when |trace| > 1e-12 * max(1, |M|_F).
double lambda_max_traceless(const SymMatrix& m);

/// Largest eigenvalue of any symmetric matrix: trace/d + lambda_max of the
/// trace-free part.
double lambda_max(const SymMatrix& m);

struct KineticCheck {
  double lhs = 0.0;        // |w|^2 / (2 rho)
  double rhs = 0.0;        // (d/2) lambda_max(w (x) w / rho - U)
  bool equality = false;   // U = (w (x) w - |w|^2 I / d) / rho within 1e-10
};

/// Pointwise kinetic inequality |w|^2/(2 rho) <= (d/2) lambda_max(w(x)w/rho - U)
/// for trace-free U. Throws BoundViolated if it fails by more than 1e-12
/// (relative), NotTraceFree for a traced U.
KineticCheck kinetic_inequality_check(std::span<const double> w, const SymMatrix& u, double rho);

/// Total-energy profile chi(t).
using EnergyProfile = std::function<double(double t)>;

EnergyProfile constant_profile(double chi);

/// e-bar = chi - (3/2) rho~ theta - (3/2) d_t Psi at every time sample of the solve.
std::vector<ScalarField> ebar(const EnergyProfile& chi, const Ansatz& ansatz, const TemperatureSolve& theta);

/// e - (d/2) lambda_max((v + grad Psi)(x)(v + grad Psi) / rho~ - U) at time t.
ScalarField gap_at(const SubsolutionState& s, const Ansatz& ansatz, const ScalarField& e, double t);

struct GapReport {
  std::vector<double> times;
  std::vector<ScalarField> gap;          // per time sample
  std::vector<double> inf_per_sample;    // spatial minimum per sample
  std::vector<double> eps;
  std::vector<double> inf_gap;           // min over samples with t >= eps
  bool member = false;                   // every inf_gap > 0
};

/// Gap against the budget `e` (one field per time sample). Membership is
/// decided on the discrete grid: the infimum over (eps, T) is the minimum
/// over samples t_j >= eps, which tightens under time refinement.
GapReport gap(const SubsolutionState& s, const Ansatz& ansatz, const std::vector<ScalarField>& e,
              const std::vector<double>& eps_list);

/// Spatial mean of |v + grad Psi|^2 / (2 rho~) - e per time sample.
std::vector<double> energy_defect_density(const SubsolutionState& s, const Ansatz& ansatz,
                                          const std::vector<ScalarField>& e);

/// int_eps^T int (|v + grad Psi|^2 / (2 rho~) - e); piecewise-cubic in time.
double I_eps(const SubsolutionState& s, double eps, const Ansatz& ansatz, const std::vector<ScalarField>& e);

struct SupBound {
  double c = 0.0;        // max sqrt(2 rho~ max(e, 0)) + max |grad Psi|
  double v_sup = 0.0;    // max over samples of |v|_inf
};

/// Throws BoundViolated when v_sup > c (1 + 1e-8).
SupBound sup_bound(const SubsolutionState& s, const Ansatz& ansatz, const std::vector<ScalarField>& e);

struct LinearResidual {
  double momentum = 0.0;    // L2 of d_t v + div U over the time samples
  double divergence = 0.0;  // L2 of div v
};

LinearResidual linear_system_residual(const SubsolutionState& s, const GridSpec& grid);

/// d(a, b) = max_t sum_j 2^{-j} |<a(t) - b(t), phi_j>| over a fixed family of
/// vector trigonometric modes ordered by |k|.
class WeakTopologyMetric {
 public:
  explicit WeakTopologyMetric(const SpaceGrid& grid, int modes = 64);

  double distance(const VectorField& a, const VectorField& b) const;
  double distance(const VelocityHistory& a, const VelocityHistory& b, const GridSpec& grid) const;
  int modes() const { return static_cast<int>(weight_.size()); }

 private:
  SpaceGrid grid_;
  std::vector<double> weight_;
  std::vector<int> component_;
  std::vector<std::vector<double>> phi_;
};

/// Constant chi = (1 + margin) sup [(d/2)|v + grad Psi|^2 / rho~ + (3/2) rho~ theta_bar + (3/2)|d_t Psi|]
/// over space and max(n_time, 65) uniformly spaced times.
double choose_chi(const Ansatz& ansatz, const VectorField& v, double theta_bar, double margin = 0.1);

/// CSV: t, inf_gap (spatial minimum at t), I_eps with eps = t.
void write_gap_csv(const std::string& path, const GapReport& report, const std::vector<double>& defect_density,
                   double dt);

}  // namespace wildgas
