#include "wildgas/subsolution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>

#include "wildgas/errors.hpp"
#include "wildgas/quadrature.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

constexpr double kPi = Spectral::kPi;

// Largest eigenvalue of a packed symmetric matrix.
double lambda_packed(int d, const double* c) {
  if (d == 2) {
    const double half = 0.5 * (c[0] - c[2]);
    return 0.5 * (c[0] + c[2]) + std::hypot(half, c[1]);
  }
  const double q = (c[0] + c[3] + c[5]) / 3.0;
  const double b00 = c[0] - q, b11 = c[3] - q, b22 = c[5] - q;
  const double off = c[1] * c[1] + c[2] * c[2] + c[4] * c[4];
  const double p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off;
  if (p2 <= 0.0) return q;
  const double p = std::sqrt(p2 / 6.0);
  const double det = b00 * (b11 * b22 - c[4] * c[4]) - c[1] * (c[1] * b22 - c[4] * c[2]) +
                     c[2] * (c[1] * c[4] - b11 * c[2]);
  const double r = std::clamp(det / (2.0 * p * p * p), -1.0, 1.0);
  return q + 2.0 * p * std::cos(std::acos(r) / 3.0);
}

int packed_size(int d) { return d * (d + 1) / 2; }

void require_trace_free(const SymMatrix& m) {
  if (std::abs(m.trace()) > 1e-12 * std::max(1.0, m.frobenius())) {
    throw NotTraceFree("matrix trace " + std::to_string(m.trace()) + " is not zero");
  }
}

double sample_end(const GridSpec& g) { return g.t_final; }

}  // namespace

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::frobenius() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

SymMatrix SymMatrix::outer(std::span<const double> w) {
  SymMatrix m;
  m.dim = static_cast<int>(w.size());
  if (m.dim != 2 && m.dim != 3) throw InvalidArgument("dimension must be 2 or 3");
  for (int i = 0; i < m.dim; ++i)
    for (int j = i; j < m.dim; ++j) m(i, j) = w[i] * w[j];
  return m;
}

SymMatrix SymMatrix::at(const SymTensorField& f, std::size_t p) {
  SymMatrix m;
  m.dim = f.grid.dim;
  for (int k = 0; k < packed_size(m.dim); ++k) m.c[k] = f.comp[k][p];
  return m;
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim != b.dim) throw InvalidArgument("dimension mismatch");
  SymMatrix r = a;
  for (int k = 0; k < 6; ++k) r.c[k] += b.c[k];
  return r;
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) { return a + (-1.0) * b; }

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix r = a;
  for (double& x : r.c) x *= s;
  return r;
}

double lambda_max_traceless(const SymMatrix& m) {
  require_trace_free(m);
  return lambda_max(m);
}

double lambda_max(const SymMatrix& m) {
  if (m.dim != 2 && m.dim != 3) throw InvalidArgument("dimension must be 2 or 3");
  return lambda_packed(m.dim, m.c.data());
}

KineticCheck kinetic_inequality_check(std::span<const double> w, const SymMatrix& u, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("density must be positive");
  const int d = static_cast<int>(w.size());
  if (u.dim != d) throw InvalidArgument("dimension mismatch");
  require_trace_free(u);
  double w2 = 0.0;
  for (double x : w) w2 += x * x;
  const SymMatrix ww = SymMatrix::outer(w);
  KineticCheck k;
  k.lhs = 0.5 * w2 / rho;
  k.rhs = 0.5 * d * lambda_max((1.0 / rho) * ww - u);
  if (k.lhs > k.rhs + 1e-12 * std::max(1.0, std::abs(k.rhs))) {
    throw BoundViolated("kinetic inequality fails: " + std::to_string(k.lhs) + " > " + std::to_string(k.rhs));
  }
  SymMatrix eq = (1.0 / rho) * ww;
  for (int i = 0; i < d; ++i) eq(i, i) -= w2 / (d * rho);
  k.equality = (u - eq).frobenius() <= 1e-10 * std::max(1.0, eq.frobenius());
  return k;
}

EnergyProfile constant_profile(double chi) {
  return [chi](double) { return chi; };
}

std::vector<ScalarField> ebar(const EnergyProfile& chi, const Ansatz& ansatz, const TemperatureSolve& theta) {
  const GridSpec& g = ansatz.grid;
  if (static_cast<int>(theta.theta.size()) != g.n_time) throw GridMismatch("temperature history length");
  std::vector<ScalarField> out;
  out.reserve(g.n_time);
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.time(j);
    const double c = chi(t);
    const ScalarField rho = ansatz.rho_tilde_at(t);
    const ScalarField dpsi = ansatz.dt_psi_at(t);
    ScalarField e(rho.grid);
    for (std::size_t p = 0; p < e.size(); ++p) e[p] = c - 1.5 * rho[p] * theta.theta[j][p] - 1.5 * dpsi[p];
    out.push_back(std::move(e));
  }
  return out;
}

ScalarField gap_at(const SubsolutionState& s, const Ansatz& ansatz, const ScalarField& e, double t) {
  const int d = ansatz.grid.dim;
  const VectorField w = s.v(t) + ansatz.grad_psi_at(t);
  const SymTensorField u = s.U(t);
  const ScalarField rho = ansatz.rho_tilde_at(t);
  ScalarField g(rho.grid);
  double m[6];
  for (std::size_t p = 0; p < g.size(); ++p) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const int k = sym_index(d, i, j);
        m[k] = w.comp[i][p] * w.comp[j][p] / rho[p] - u.comp[k][p];
      }
    g[p] = e[p] - 0.5 * d * lambda_packed(d, m);
  }
  return g;
}

GapReport gap(const SubsolutionState& s, const Ansatz& ansatz, const std::vector<ScalarField>& e,
              const std::vector<double>& eps_list) {
  const GridSpec& g = ansatz.grid;
  if (static_cast<int>(e.size()) != g.n_time) throw GridMismatch("energy budget needs one field per sample");
  GapReport r;
  r.eps = eps_list;
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.time(j);
    r.times.push_back(t);
    r.gap.push_back(gap_at(s, ansatz, e[j], t));
    r.inf_per_sample.push_back(min_value(r.gap.back()));
  }
  r.member = true;
  for (double eps : eps_list) {
    double inf = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.n_time; ++j)
      if (r.times[j] >= eps) inf = std::min(inf, r.inf_per_sample[j]);
    r.inf_gap.push_back(inf);
    r.member = r.member && inf > 0.0;
  }
  return r;
}

std::vector<double> energy_defect_density(const SubsolutionState& s, const Ansatz& ansatz,
                                          const std::vector<ScalarField>& e) {
  const GridSpec& g = ansatz.grid;
  if (static_cast<int>(e.size()) != g.n_time) throw GridMismatch("energy budget needs one field per sample");
  std::vector<double> f(g.n_time);
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.time(j);
    const VectorField w = s.v(t) + ansatz.grad_psi_at(t);
    const ScalarField rho = ansatz.rho_tilde_at(t);
    double acc = 0.0;
    for (std::size_t p = 0; p < rho.size(); ++p) {
      double w2 = 0.0;
      for (const auto& c : w.comp) w2 += c[p] * c[p];
      acc += 0.5 * w2 / rho[p] - e[j][p];
    }
    f[j] = acc / rho.size();
  }
  return f;
}

double I_eps(const SubsolutionState& s, double eps, const Ansatz& ansatz, const std::vector<ScalarField>& e) {
  const GridSpec& g = ansatz.grid;
  if (!(eps > 0.0 && eps < sample_end(g))) throw InvalidArgument("eps must lie in (0, T)");
  return sample_integral(energy_defect_density(s, ansatz, e), g.dt(), eps, g.t_final);
}

SupBound sup_bound(const SubsolutionState& s, const Ansatz& ansatz, const std::vector<ScalarField>& e) {
  const GridSpec& g = ansatz.grid;
  if (static_cast<int>(e.size()) != g.n_time) throw GridMismatch("energy budget needs one field per sample");
  SupBound b;
  double root = 0.0, grad = 0.0;
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.time(j);
    const ScalarField rho = ansatz.rho_tilde_at(t);
    for (std::size_t p = 0; p < rho.size(); ++p) root = std::max(root, std::sqrt(2.0 * rho[p] * std::max(e[j][p], 0.0)));
    grad = std::max(grad, max_norm(ansatz.grad_psi_at(t)));
    b.v_sup = std::max(b.v_sup, max_norm(s.v(t)));
  }
  b.c = root + grad;
  if (b.v_sup > b.c * (1.0 + 1e-8)) {
    throw BoundViolated("sup |v| = " + std::to_string(b.v_sup) + " exceeds c = " + std::to_string(b.c));
  }
  return b;
}

LinearResidual linear_system_residual(const SubsolutionState& s, const GridSpec& grid) {
  const int d = grid.dim;
  double r1 = 0.0, r2 = 0.0;
  for (int j = 0; j < grid.n_time; ++j) {
    const double t = grid.time(j);
    const double wgt = ((j == 0 || j == grid.n_time - 1) ? 0.5 : 1.0) * grid.dt();
    const VectorField dv = s.dt_v(t);
    const SymTensorField u = s.U(t);
    const ScalarField div_v = divergence(s.v(t));
    double a1 = 0.0, a2 = 0.0;
    for (int i = 0; i < d; ++i) {
      ScalarField row = dv.component(i);
      for (int k = 0; k < d; ++k) {
        ScalarField uik(u.grid);
        uik.data = u.comp[sym_index(d, i, k)];
        row = row + spectral_derivative(uik, k);
      }
      for (double x : row.data) a1 += x * x;
    }
    for (double x : div_v.data) a2 += x * x;
    r1 += wgt * a1 / div_v.size();
    r2 += wgt * a2 / div_v.size();
  }
  return {std::sqrt(r1), std::sqrt(r2)};
}

WeakTopologyMetric::WeakTopologyMetric(const SpaceGrid& grid, int modes) : grid_(grid) {
  grid.validate();
  const int d = grid.dim;
  const int kmax = 4;
  std::vector<std::array<int, 3>> ks;
  std::array<int, 3> k{0, 0, 0};
  const int span = 2 * kmax + 1;
  const int total = d == 2 ? span * span : span * span * span;
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    for (int a = 0; a < d; ++a) {
      k[a] = rest % span - kmax;
      rest /= span;
    }
    // Keep one representative of each +-k pair.
    int first = 0;
    for (int a = 0; a < d && first == 0; ++a) first = k[a];
    if (first < 0) continue;
    ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end(), [](const auto& x, const auto& y) {
    const int nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const int ny = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    return std::tie(nx, x) < std::tie(ny, y);
  });
  const std::size_t np = grid.points();
  double w = 1.0;
  for (const auto& kk : ks) {
    const bool zero = kk[0] == 0 && kk[1] == 0 && kk[2] == 0;
    for (int kind = 0; kind < (zero ? 1 : 2); ++kind) {
      std::vector<double> f(np);
      for (std::size_t p = 0; p < np; ++p) {
        double arg = 0.0;
        for (int a = 0; a < d; ++a) arg += 2.0 * kPi * kk[a] * grid.coord(p, a);
        f[p] = kind == 0 ? std::cos(arg) : std::sin(arg);
      }
      for (int c = 0; c < d; ++c) {
        if (static_cast<int>(weight_.size()) == modes) return;
        w *= 0.5;
        weight_.push_back(w);
        component_.push_back(c);
        phi_.push_back(f);
      }
    }
  }
}

double WeakTopologyMetric::distance(const VectorField& a, const VectorField& b) const {
  require_same_grid(a.grid, grid_);
  require_same_grid(b.grid, grid_);
  double s = 0.0;
  for (std::size_t j = 0; j < weight_.size(); ++j) {
    const auto& ac = a.comp[component_[j]];
    const auto& bc = b.comp[component_[j]];
    double acc = 0.0;
    for (std::size_t p = 0; p < ac.size(); ++p) acc += (ac[p] - bc[p]) * phi_[j][p];
    s += weight_[j] * std::abs(acc / ac.size());
  }
  return s;
}

double WeakTopologyMetric::distance(const VelocityHistory& a, const VelocityHistory& b, const GridSpec& grid) const {
  double m = 0.0;
  for (int j = 0; j < grid.n_time; ++j) {
    const double t = grid.time(j);
    m = std::max(m, distance(a.velocity(t), b.velocity(t)));
  }
  return m;
}

double choose_chi(const Ansatz& ansatz, const VectorField& v, double theta_bar, double margin) {
  const GridSpec& g = ansatz.grid;
  const int d = g.dim;
  const int samples = std::max(g.n_time, 65);
  double sup = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = g.t_final * j / (samples - 1);
    const VectorField w = v + ansatz.grad_psi_at(t);
    const ScalarField rho = ansatz.rho_tilde_at(t);
    const ScalarField dpsi = ansatz.dt_psi_at(t);
    for (std::size_t p = 0; p < rho.size(); ++p) {
      double w2 = 0.0;
      for (const auto& c : w.comp) w2 += c[p] * c[p];
      sup = std::max(sup, 0.5 * d * w2 / rho[p] + 1.5 * rho[p] * theta_bar + 1.5 * std::abs(dpsi[p]));
    }
  }
  return (1.0 + margin) * sup;
}

void write_gap_csv(const std::string& path, const GapReport& report, const std::vector<double>& defect_density,
                   double dt) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path);
  os.precision(17);
  os << "t,inf_gap,I_eps\n";
  const double end = dt * (defect_density.size() - 1);
  for (std::size_t j = 0; j < report.times.size(); ++j) {
    const double t = report.times[j];
    os << t << ',' << report.inf_per_sample[j] << ',' << sample_integral(defect_density, dt, t, end) << '\n';
  }
}

}  // namespace wildgas
