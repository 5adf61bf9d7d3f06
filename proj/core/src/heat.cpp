#include "wildgas/heat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>

#include "wildgas/errors.hpp"
#include "wildgas/quadrature.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = Spectral::kPi;

// Pointwise coefficients of the explicit part at one time:
//   N(theta) = diff * Delta theta - adv . grad theta + react * theta + src.
struct Coefficients {
  double t = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> diff;
  std::vector<std::vector<double>> adv;
  std::vector<double> react;
  std::vector<double> src;
};

class ExplicitPart {
 public:
  ExplicitPart(const VelocityHistory& v, const Ansatz& a, const HeatSource& source, double gamma)
      : v_(v), a_(a), source_(source), gamma_(gamma), sp_(Spectral::on(a.grid.space())) {}

  // Returns the dealiased transform of N; the physical minimum of theta is
  // written to `theta_min` when requested.
  Spectrum operator()(const Spectrum& th, double t, double* theta_min = nullptr) {
    const Coefficients& c = at(t);
    const int d = a_.grid.dim;
    const std::size_t modes = sp_.modes();
    const std::vector<double> theta = sp_.backward(th);
    if (theta_min) {
      double m = std::numeric_limits<double>::infinity();
      for (double x : theta) m = std::isfinite(x) ? std::min(m, x) : -std::numeric_limits<double>::infinity();
      *theta_min = m;
    }
    Spectrum tmp(modes);
    for (std::size_t m = 0; m < modes; ++m) tmp[m] = -sp_.laplace_symbol(m) * th[m];
    std::vector<double> out = sp_.backward(tmp);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = c.diff[p] * out[p] + c.react[p] * theta[p];
    if (!c.src.empty())
      for (std::size_t p = 0; p < out.size(); ++p) out[p] += c.src[p];
    for (int i = 0; i < d; ++i) {
      for (std::size_t m = 0; m < modes; ++m) tmp[m] = cplx(0.0, sp_.deriv_factor(m, i)) * th[m];
      const std::vector<double> g = sp_.backward(tmp);
      for (std::size_t p = 0; p < out.size(); ++p) out[p] -= c.adv[i][p] * g[p];
    }
    Spectrum r = sp_.forward(out);
    for (std::size_t m = 0; m < modes; ++m)
      if (!sp_.dealias_keep(m)) r[m] = 0.0;
    return r;
  }

 private:
  const Coefficients& at(double t) {
    for (const auto& c : cache_)
      if (std::abs(c.t - t) <= 1e-14 * std::max(1.0, std::abs(t))) return c;
    Coefficients& c = cache_[next_];
    next_ = (next_ + 1) % cache_.size();
    const int d = a_.grid.dim;
    const ScalarField rho = a_.rho_tilde_at(t);
    const VectorField grad_rho = a_.grad_rho_tilde_at(t);
    const ScalarField lap_psi = a_.lap_psi_at(t);
    const VectorField w = v_.velocity(t) + a_.grad_psi_at(t);
    const std::size_t n = rho.size();
    c.t = t;
    c.diff.assign(n, 0.0);
    c.react.assign(n, 0.0);
    c.adv.assign(d, std::vector<double>(n, 0.0));
    for (std::size_t p = 0; p < n; ++p) {
      const double ar = 2.0 / (3.0 * rho[p]);
      double gw = 0.0;
      for (int i = 0; i < d; ++i) {
        c.adv[i][p] = w.comp[i][p] / rho[p];
        gw += grad_rho.comp[i][p] * w.comp[i][p];
      }
      c.diff[p] = ar - gamma_;
      c.react[p] = ar * (-lap_psi[p] + gw / rho[p]);
    }
    c.src.clear();
    if (source_) {
      const ScalarField s = source_(t);
      c.src.resize(n);
      for (std::size_t p = 0; p < n; ++p) c.src[p] = 2.0 * s[p] / (3.0 * rho[p]);
    }
    return c;
  }

  const VelocityHistory& v_;
  const Ansatz& a_;
  const HeatSource& source_;
  double gamma_;
  Spectral& sp_;
  std::array<Coefficients, 3> cache_;
  std::size_t next_ = 0;
};

// ETDRK4 weights for the linear symbol L (Kassam-Trefethen contour means).
struct EtdWeights {
  std::vector<double> e, e2, q, f1, f2, f3;
};

EtdWeights etd_weights(const Spectral& sp, double gamma, double h) {
  constexpr int kContour = 32;
  const std::size_t modes = sp.modes();
  EtdWeights w;
  for (auto* v : {&w.e, &w.e2, &w.q, &w.f1, &w.f2, &w.f3}) v->resize(modes);
  std::map<double, std::array<double, 6>> memo;
  for (std::size_t m = 0; m < modes; ++m) {
    const double z = -gamma * sp.laplace_symbol(m) * h;
    auto it = memo.find(z);
    if (it == memo.end()) {
      cplx q = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
      for (int j = 0; j < kContour; ++j) {
        const cplx lr = z + std::polar(1.0, kPi * (j + 0.5) / kContour);
        const cplx el = std::exp(lr);
        const cplx l3 = lr * lr * lr;
        q += (std::exp(lr / 2.0) - 1.0) / lr;
        f1 += (-4.0 - lr + el * (4.0 - 3.0 * lr + lr * lr)) / l3;
        f2 += (2.0 + lr + el * (-2.0 + lr)) / l3;
        f3 += (-4.0 - 3.0 * lr - lr * lr + el * (4.0 - lr)) / l3;
      }
      const std::array<double, 6> c{std::exp(z),
                                    std::exp(z / 2.0),
                                    h * q.real() / kContour,
                                    h * f1.real() / kContour,
                                    h * f2.real() / kContour,
                                    h * f3.real() / kContour};
      it = memo.emplace(z, c).first;
    }
    const auto& c = it->second;
    w.e[m] = c[0];
    w.e2[m] = c[1];
    w.q[m] = c[2];
    w.f1[m] = c[3];
    w.f2[m] = c[4];
    w.f3[m] = c[5];
  }
  return w;
}

// Upper bound of the explicit advection plus reaction rate over [0,T].
double explicit_rate(const VelocityHistory& v, const Ansatz& a) {
  const double h_abs = std::max(std::abs(a.h.min_value()), std::abs(a.h.max_value()));
  const double rho_min = a.rho_tilde_min();
  const double w_max = v.speed_bound() + max_norm(a.grad_psi0);
  const double grad_rho = max_norm(a.grad_rho0) + h_abs * max_norm(a.grad_div_m0);
  const double k_max = 2.0 * kPi * (a.grid.n_space / 2) * std::sqrt(static_cast<double>(a.grid.dim));
  const double advect = w_max / rho_min * k_max;
  const double react = 2.0 / (3.0 * rho_min) * (max_abs(a.div_m0) + grad_rho * w_max / rho_min);
  return advect + react;
}

double trapezoid_weight(int j, int n) { return (j == 0 || j == n - 1) ? 0.5 : 1.0; }

}  // namespace

ComparisonBounds comparison_bounds(const Ansatz& ansatz, const ScalarField& theta0) {
  require_same_grid(theta0.grid, ansatz.grid.space());
  if (!(min_value(theta0) > 0.0)) throw NonPositiveInitial("theta0 must be positive");
  ComparisonBounds b;
  b.z_min0 = std::numeric_limits<double>::infinity();
  b.z_max0 = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < theta0.size(); ++p) {
    const double z = std::log(std::pow(theta0[p], 1.5) / ansatz.rho0[p]);
    b.z_min0 = std::min(b.z_min0, z);
    b.z_max0 = std::max(b.z_max0, z);
  }
  const double t_final = ansatz.grid.t_final;
  const int samples = std::max(ansatz.grid.n_time, 65);
  for (int j = 0; j < samples; ++j) {
    const ScalarField rho = ansatz.rho_tilde_at(t_final * j / (samples - 1));
    ScalarField log_rho(rho.grid);
    for (std::size_t p = 0; p < rho.size(); ++p) log_rho[p] = std::log(rho[p]);
    const ScalarField lap = laplacian(log_rho);
    const VectorField g = gradient(log_rho);
    for (std::size_t p = 0; p < rho.size(); ++p) {
      double g2 = 0.0;
      for (const auto& c : g.comp) g2 += c[p] * c[p];
      b.f_bar = std::max(b.f_bar, std::abs(2.0 / 3.0 * lap[p] + 4.0 / 9.0 * g2));
    }
  }
  const double growth = 2.0 * b.f_bar * t_final / ansatz.rho_lower;
  b.theta_lo = std::pow(ansatz.rho_tilde_min() * std::exp(b.z_min0 - growth), 2.0 / 3.0);
  b.theta_hi = std::pow(ansatz.rho_tilde_max() * std::exp(b.z_max0 + growth), 2.0 / 3.0);
  return b;
}

TemperatureSolve solve_theta(const VelocityHistory& v, const Ansatz& ansatz, const ScalarField& theta0,
                             const HeatOptions& options) {
  const GridSpec& grid = ansatz.grid;
  require_same_grid(v.space(), grid.space());
  const ComparisonBounds bounds = comparison_bounds(ansatz, theta0);

  const double gamma = 2.0 / (3.0 * ansatz.rho_tilde_min());
  const double rate = explicit_rate(v, ansatz);
  double dt_max = options.stability_ratio / std::max(rate, 1e-300);
  const double scale = v.time_scale();
  if (std::isfinite(scale)) dt_max = std::min(dt_max, scale / options.steps_per_window);
  const double interval = grid.dt();
  const int substeps = std::max(options.min_substeps, static_cast<int>(std::ceil(interval / dt_max - 1e-12)));
  const double h = interval / substeps;
  if (static_cast<double>(substeps) * (grid.n_time - 1) > static_cast<double>(options.max_steps)) {
    throw StepFailure("temperature solve needs " + std::to_string(substeps) + " substeps per sample");
  }

  TemperatureSolve out;
  out.grid = grid;
  out.theta_lo = bounds.theta_lo;
  out.theta_hi = bounds.theta_hi;
  out.dt = h;
  out.max_ratio = h * rate;
  out.theta.reserve(grid.n_time);
  out.theta.push_back(theta0);
  out.trace.push_back({0.0, min_value(theta0), max_value(theta0)});

  Spectral& sp = Spectral::on(grid.space());
  const std::size_t modes = sp.modes();
  const EtdWeights w = etd_weights(sp, gamma, h);
  ExplicitPart rhs(v, ansatz, options.source, gamma);

  Spectrum u = sp.forward(theta0.data);
  Spectrum a(modes), b(modes), c(modes);
  for (int j = 0; j + 1 < grid.n_time; ++j) {
    const double tj = grid.time(j);
    for (int s = 0; s < substeps; ++s) {
      const double t = tj + s * h;
      double theta_min = 0.0;
      const Spectrum nu = rhs(u, t, &theta_min);
      if (!(theta_min > 0.0)) {
        throw StepFailure("temperature lost positivity at t = " + std::to_string(t));
      }
      for (std::size_t m = 0; m < modes; ++m) a[m] = w.e2[m] * u[m] + w.q[m] * nu[m];
      const Spectrum na = rhs(a, t + 0.5 * h);
      for (std::size_t m = 0; m < modes; ++m) b[m] = w.e2[m] * u[m] + w.q[m] * na[m];
      const Spectrum nb = rhs(b, t + 0.5 * h);
      for (std::size_t m = 0; m < modes; ++m) c[m] = w.e2[m] * a[m] + w.q[m] * (2.0 * nb[m] - nu[m]);
      const Spectrum nc = rhs(c, t + h);
      for (std::size_t m = 0; m < modes; ++m) {
        u[m] = w.e[m] * u[m] + w.f1[m] * nu[m] + 2.0 * w.f2[m] * (na[m] + nb[m]) + w.f3[m] * nc[m];
      }
      ++out.steps;
    }
    ScalarField th(grid.space());
    th.data = sp.backward(u);
    const double lo = min_value(th);
    if (!(lo > 0.0) || !std::isfinite(max_value(th))) {
      throw StepFailure("temperature lost positivity at t = " + std::to_string(grid.time(j + 1)));
    }
    out.trace.push_back({grid.time(j + 1), lo, max_value(th)});
    out.theta.push_back(std::move(th));
  }
  return out;
}

HeatResiduals heat_residuals(const TemperatureSolve& solve, const VelocityHistory& v, const Ansatz& ansatz,
                             const HeatSource& source) {
  const GridSpec& grid = solve.grid;
  const int nt = grid.n_time;
  if (nt < 5) throw InvalidArgument("residuals need at least 5 time samples");
  if (static_cast<int>(solve.theta.size()) != nt) throw GridMismatch("incomplete temperature history");
  const double dt = grid.dt();
  const int d = grid.dim;
  const std::size_t np = grid.space().points();

  HeatResiduals r;
  r.per_sample.resize(nt);
  double e8 = 0.0, e10 = 0.0, gap = 0.0;
  for (int j = 0; j < nt; ++j) {
    const double t = grid.time(j);
    const ScalarField& th = solve.theta[j];
    const ScalarField rho = ansatz.rho_tilde_at(t);
    const VectorField grad_rho = ansatz.grad_rho_tilde_at(t);
    const ScalarField lap_psi = ansatz.lap_psi_at(t);
    const VectorField w = v.velocity(t) + ansatz.grad_psi_at(t);
    const VectorField grad_th = gradient(th);
    const ScalarField lap_th = laplacian(th);
    ScalarField log_th(th.grid);
    for (std::size_t p = 0; p < np; ++p) log_th[p] = std::log(th[p]);
    const VectorField grad_log = gradient(log_th);
    const ScalarField lap_log = laplacian(log_th);
    const ScalarField dt_rho = ansatz.dt_rho_tilde_at(t);
    ScalarField entropy(th.grid);
    for (std::size_t p = 0; p < np; ++p) entropy[p] = 1.5 * log_th[p] - std::log(rho[p]);
    const VectorField grad_s = gradient(entropy);
    const ScalarField s_src = source ? source(t) : ScalarField(th.grid);

    double sum8 = 0.0, sum10 = 0.0, sumg = 0.0, worst = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      const double th_t = sample_derivative([&](int k) { return solve.theta[k][p]; }, j, nt, dt);
      // rho~ depends on t analytically; only theta needs differencing.
      const double s_t = 1.5 * th_t / th[p] - dt_rho[p] / rho[p];
      double w_grad_th = 0.0, w_grad_rho = 0.0, w_grad_s = 0.0, g2 = 0.0;
      for (int i = 0; i < d; ++i) {
        w_grad_th += w.comp[i][p] * grad_th.comp[i][p];
        w_grad_rho += w.comp[i][p] * grad_rho.comp[i][p];
        w_grad_s += w.comp[i][p] * grad_s.comp[i][p];
        g2 += grad_log.comp[i][p] * grad_log.comp[i][p];
      }
      const double r8 = 1.5 * (rho[p] * th_t + w_grad_th) - lap_th[p] + th[p] * lap_psi[p] -
                        th[p] * w_grad_rho / rho[p] - s_src[p];
      const double r10 = rho[p] * s_t + w_grad_s - lap_log[p] - g2 - s_src[p] / th[p];
      sum8 += r8 * r8;
      sum10 += r10 * r10;
      const double dg = r10 - r8 / th[p];
      sumg += dg * dg;
      worst = std::max(worst, std::abs(r8));
    }
    const double wgt = trapezoid_weight(j, nt) * dt / static_cast<double>(np);
    e8 += wgt * sum8;
    e10 += wgt * sum10;
    gap += wgt * sumg;
    r.per_sample[j] = worst;
  }
  r.internal_energy = std::sqrt(e8);
  r.entropy = std::sqrt(e10);
  r.equivalence_gap = std::sqrt(gap);
  return r;
}

double entropy_residual(const TemperatureSolve& solve, const VelocityHistory& v, const Ansatz& ansatz,
                        const HeatSource& source) {
  return heat_residuals(solve, v, ansatz, source).entropy;
}

double internal_energy_budget_defect(const TemperatureSolve& solve, const VelocityHistory& v,
                                     const Ansatz& ansatz, const HeatSource& source) {
  const GridSpec& grid = solve.grid;
  const int nt = grid.n_time;
  if (nt < 4) throw InvalidArgument("budget audit needs at least 4 time samples");
  std::vector<double> energy(nt), flux(nt);
  for (int j = 0; j < nt; ++j) {
    const double t = grid.time(j);
    const ScalarField& th = solve.theta[j];
    const ScalarField rho = ansatz.rho_tilde_at(t);
    const VectorField grad_rho = ansatz.grad_rho_tilde_at(t);
    const ScalarField lap_psi = ansatz.lap_psi_at(t);
    const VectorField w = v.velocity(t) + ansatz.grad_psi_at(t);
    double e = 0.0, f = source ? integrate(source(t)) * th.size() : 0.0;
    for (std::size_t p = 0; p < th.size(); ++p) {
      double wg = 0.0;
      for (int i = 0; i < grid.dim; ++i) wg += w.comp[i][p] * grad_rho.comp[i][p];
      e += 1.5 * rho[p] * th[p];
      f += th[p] * (-lap_psi[p] + wg / rho[p]);
    }
    energy[j] = e / th.size();
    flux[j] = f / th.size();
  }
  // Cumulative integral with cubic-interpolation panels.
  const double dt = grid.dt();
  double acc = 0.0, worst = 0.0;
  for (int j = 0; j + 1 < nt; ++j) {
    double panel;
    if (j == 0)
      panel = (9.0 * flux[0] + 19.0 * flux[1] - 5.0 * flux[2] + flux[3]) / 24.0;
    else if (j == nt - 2)
      panel = (9.0 * flux[j + 1] + 19.0 * flux[j] - 5.0 * flux[j - 1] + flux[j - 2]) / 24.0;
    else
      panel = (-flux[j - 1] + 13.0 * flux[j] + 13.0 * flux[j + 1] - flux[j + 2]) / 24.0;
    acc += dt * panel;
    worst = std::max(worst, std::abs(energy[j + 1] - energy[0] - acc));
  }
  return worst / std::abs(energy[0]);
}

void write_heat_trace(const std::string& path, const TemperatureSolve& solve,
                      const std::vector<double>& residual_per_sample) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path);
  os.precision(17);
  os << "t,theta_min,theta_max,residual\n";
  for (std::size_t j = 0; j < solve.trace.size(); ++j) {
    const auto& row = solve.trace[j];
    os << row.t << ',' << row.theta_min << ',' << row.theta_max << ',';
    if (j < residual_per_sample.size())
      os << residual_per_sample[j];
    else
      os << "nan";
    os << '\n';
  }
}

}  // namespace wildgas
