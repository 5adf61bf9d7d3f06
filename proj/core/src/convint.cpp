#include "wildgas/convint.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "wildgas/errors.hpp"
#include "wildgas/quadrature.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
constexpr double kPi = Spectral::kPi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double bump(double u) { return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0; }

double lambda_max_packed(int d, const double* c) {
  SymMatrix m;
  m.dim = d;
  std::copy(c, c + d * (d + 1) / 2, m.c.begin());
  return lambda_max(m);
}

std::vector<WaveOrientation> orientations(int d, double freq) {
  const double r = 1.0 / std::sqrt(2.0);
  if (d == 2) {
    return {{{1, 0, 0}, {0, 1, 0}, freq},
            {{0, 1, 0}, {1, 0, 0}, freq},
            {{r, r, 0}, {r, -r, 0}, freq},
            {{r, -r, 0}, {r, r, 0}, freq}};
  }
  return {{{1, 0, 0}, {0, 1, 0}, freq}, {{0, 1, 0}, {0, 0, 1}, freq}, {{0, 0, 1}, {1, 0, 0}, freq},
          {{1, 0, 0}, {0, 0, 1}, freq}, {{0, 1, 0}, {1, 0, 0}, freq}, {{0, 0, 1}, {0, 1, 0}, freq}};
}

double spatial_bump(const SpaceGrid& g, const Box& box, std::size_t p) {
  if (box.m == 0) return 1.0;
  double v = 1.0;
  for (int a = 0; a < g.dim && v != 0.0; ++a) {
    const double center = (box.cell[a] + 0.5) / box.m;
    v *= bump((g.coord(p, a) - center) * 2.0 * box.m);
  }
  return v;
}

// Samples of rho~ and grad Psi on [t1, t2]: the grid times inside plus both ends.
struct CoefficientSamples {
  std::vector<double> times;
  std::vector<ScalarField> rho;
  std::vector<VectorField> v;
};

CoefficientSamples coefficient_samples(const Ansatz& a, double t1, double t2) {
  CoefficientSamples s;
  s.times.push_back(t1);
  for (int j = 0; j < a.grid.n_time; ++j) {
    const double t = a.grid.time(j);
    if (t > t1 && t < t2) s.times.push_back(t);
  }
  s.times.push_back(t2);
  for (double t : s.times) {
    s.rho.push_back(a.rho_tilde_at(t));
    s.v.push_back(a.grad_psi_at(t));
  }
  return s;
}

// Builds the m-refinement and reports the largest oscillation over its boxes.
BoxDecomposition build_boxes(const Ansatz& a, const CoefficientSamples& cs, double t1, double t2, int m,
                             double& max_osc) {
  const SpaceGrid g = a.grid.space();
  const int d = g.dim;
  const int cells = d == 2 ? m * m : m * m * m;
  BoxDecomposition bd;
  bd.t1 = t1;
  bd.t2 = t2;
  bd.m = m;
  max_osc = 0.0;
  for (int k = 0; k < m; ++k) {
    const double b1 = t1 + (t2 - t1) * k / m;
    const double b2 = k + 1 == m ? t2 : t1 + (t2 - t1) * (k + 1) / m;
    for (int c = 0; c < cells; ++c) {
      Box box;
      box.t1 = b1;
      box.t2 = b2;
      box.m = m;
      int rest = c;
      for (int ax = 0; ax < d; ++ax) {
        box.cell[ax] = rest % m;
        rest /= m;
      }
      double rmin = kInf, rmax = -kInf;
      Vec3 mean{0, 0, 0};
      std::size_t count = 0;
      std::vector<std::pair<std::size_t, std::size_t>> members;
      for (std::size_t j = 0; j < cs.times.size(); ++j) {
        if (cs.times[j] < b1 || cs.times[j] > b2) continue;
        for (std::size_t p = 0; p < g.points(); ++p) {
          if (!box.contains(g, p)) continue;
          members.emplace_back(j, p);
          rmin = std::min(rmin, cs.rho[j][p]);
          rmax = std::max(rmax, cs.rho[j][p]);
          for (int ax = 0; ax < d; ++ax) mean[ax] += cs.v[j].comp[ax][p];
          ++count;
        }
      }
      for (int ax = 0; ax < d; ++ax) mean[ax] /= std::max<std::size_t>(count, 1);
      double vdev = 0.0;
      for (const auto& [j, p] : members) {
        double s = 0.0;
        for (int ax = 0; ax < d; ++ax) s += std::pow(cs.v[j].comp[ax][p] - mean[ax], 2);
        vdev = std::max(vdev, std::sqrt(s));
      }
      max_osc = std::max({max_osc, rmax - rmin, vdev});
      bd.boxes.push_back(box);
      bd.frozen.push_back({rmax, mean});
    }
  }
  return bd;
}

double lipschitz_aggregate(const Ansatz& a, double t1, double t2) {
  const int d = a.grid.dim;
  const double h_abs = std::max(std::abs(a.h.min_value()), std::abs(a.h.max_value()));
  const double lip_x_rho = max_norm(a.grad_rho0) + h_abs * max_norm(a.grad_div_m0);
  const double lip_t_rho = max_abs(a.div_m0);
  double hess = 0.0;
  {
    std::vector<VectorField> rows;
    for (int i = 0; i < d; ++i) rows.push_back(gradient(a.grad_psi0.component(i)));
    for (std::size_t p = 0; p < a.psi0.size(); ++p) {
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += rows[i].comp[j][p] * rows[i].comp[j][p];
      hess = std::max(hess, std::sqrt(s));
    }
  }
  const double lip_t_v = a.h.k * kPi / a.h.t_final * max_norm(a.grad_psi0);
  const double root_d = std::sqrt(static_cast<double>(d));
  return std::max(root_d * lip_x_rho + (t2 - t1) * lip_t_rho, root_d * hess + (t2 - t1) * lip_t_v);
}

int refinement_cap(const Ansatz& a, double t1, double t2, const ConvintOptions& o) {
  const int d = a.grid.dim;
  int cap = std::max(1, a.grid.n_space / std::max(1, o.min_box_points));
  const int time_cap = static_cast<int>(std::floor((t2 - t1) / ((o.min_window_samples + 1) * a.grid.dt())));
  cap = std::min(cap, std::max(1, time_cap));
  while (cap > 1 && std::pow(cap, d + 1) > o.max_boxes) --cap;
  return cap;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

Iterate evaluate(const Problem& problem, SubsolutionState state) {
  Iterate it{std::move(state), {}, {}};
  it.theta = solve_theta(it.state, problem.ansatz, problem.theta0, problem.heat);
  it.ebar = ebar(problem.chi, problem.ansatz, it.theta);
  return it;
}

double epsilon_for_delta(double delta, double e_sup, double rho_lo, double rho_hi, double v_osc, int dim) {
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  if (!(rho_lo > 0.0) || rho_hi < rho_lo) throw InvalidArgument("invalid density range");
  if (rho_lo == rho_hi && v_osc == 0.0) return kInf;
  const double rho_m = 0.5 * rho_lo;
  const double b = std::sqrt(2.0 * rho_hi * std::max(e_sup, 0.0));
  const double lin = 0.5 * dim * (2.0 * b / rho_m + b * b / (rho_m * rho_m));
  const double quad = 0.5 * dim / rho_m;
  const double root = (-lin + std::sqrt(lin * lin + quad * delta)) / (2.0 * quad);
  return std::min(0.99 * root, rho_m);
}

bool Box::contains(const SpaceGrid& g, std::size_t p) const {
  if (m == 0) return true;
  for (int a = 0; a < g.dim; ++a) {
    const int c = std::min(static_cast<int>(std::floor(g.coord(p, a) * m)), m - 1);
    if (c != cell[a]) return false;
  }
  return true;
}

double BoxDecomposition::box_bound(int dim) const {
  if (!std::isfinite(eps_osc)) return 1.0;
  return std::pow(std::ceil(lipschitz / eps_osc), dim + 1);
}

BoxDecomposition localize(const Ansatz& ansatz, double t1, double t2, double eps, const ConvintOptions& options) {
  if (!(eps > 0.0)) throw InvalidArgument("oscillation bound must be positive");
  if (!(t1 < t2)) throw InvalidArgument("empty time interval");
  const CoefficientSamples cs = coefficient_samples(ansatz, t1, t2);
  const int cap = refinement_cap(ansatz, t1, t2, options);
  for (int m = 1; m <= cap; ++m) {
    double osc = 0.0;
    BoxDecomposition bd = build_boxes(ansatz, cs, t1, t2, m, osc);
    if (osc < eps) {
      bd.eps_osc = eps;
      bd.lipschitz = lipschitz_aggregate(ansatz, t1, t2);
      return bd;
    }
  }
  throw EpsilonTooSmall("no refinement up to m = " + std::to_string(cap) + " reaches oscillation " +
                        std::to_string(eps));
}

BoxDecomposition finest_decomposition(const Ansatz& ansatz, double t1, double t2, const ConvintOptions& options) {
  if (!(t1 < t2)) throw InvalidArgument("empty time interval");
  const CoefficientSamples cs = coefficient_samples(ansatz, t1, t2);
  double osc = 0.0;
  BoxDecomposition bd = build_boxes(ansatz, cs, t1, t2, refinement_cap(ansatz, t1, t2, options), osc);
  bd.eps_osc = osc;
  bd.lipschitz = lipschitz_aggregate(ansatz, t1, t2);
  bd.fallback = true;
  return bd;
}

SampledFrame sample_frame(const SubsolutionState& s, const Ansatz& ansatz, const std::vector<ScalarField>& e) {
  const GridSpec& g = ansatz.grid;
  if (static_cast<int>(e.size()) != g.n_time) throw GridMismatch("energy budget needs one field per sample");
  SampledFrame f;
  f.space = g.space();
  f.e = e;
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.time(j);
    f.times.push_back(t);
    f.w.push_back(s.v(t) + ansatz.grad_psi_at(t));
    f.u.push_back(s.U(t));
    f.rho.push_back(ansatz.rho_tilde_at(t));
  }
  return f;
}

WaveOrientation lattice_orientation(const std::array<int, 3>& k, int dim) {
  WaveOrientation o;
  double norm = 0.0;
  for (int i = 0; i < dim; ++i) norm += static_cast<double>(k[i]) * k[i];
  norm = std::sqrt(norm);
  if (norm == 0.0) throw InvalidArgument("zero wave vector");
  o.frequency = norm;
  for (int i = 0; i < 3; ++i) o.xi[i] = i < dim ? k[i] / norm : 0.0;
  if (dim == 2) {
    o.a = {-o.xi[1], o.xi[0], 0.0};
  } else {
    // Cross product with the axis least aligned with k.
    int j = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(o.xi[i]) < std::abs(o.xi[j])) j = i;
    Vec3 ej{0, 0, 0};
    ej[j] = 1.0;
    Vec3 c{o.xi[1] * ej[2] - o.xi[2] * ej[1], o.xi[2] * ej[0] - o.xi[0] * ej[2], o.xi[0] * ej[1] - o.xi[1] * ej[0]};
    const double cn = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    for (double& x : c) x /= cn;
    o.a = c;
  }
  return o;
}

WaveGroup wave_fields(const SpaceGrid& grid, const Box& box, const WaveOrientation& orientation, double phase) {
  const int d = grid.dim;
  const std::size_t np = grid.points();
  const Vec3& a = orientation.a;
  const Vec3& xi = orientation.xi;
  const double k = 2.0 * kPi * orientation.frequency;
  std::vector<double> pot(np);
  for (std::size_t p = 0; p < np; ++p) {
    const double eta = spatial_bump(grid, box, p);
    if (eta == 0.0) continue;
    double arg = phase;
    for (int ax = 0; ax < d; ++ax) arg += k * xi[ax] * grid.coord(p, ax);
    pot[p] = eta * std::sin(arg) / (k * k * k * k);
  }
  const Spectral& sp = Spectral::on(grid);
  const Spectrum g_hat = sp.forward(pot);
  const std::size_t modes = sp.modes();
  const int nsym = grid.sym_components();
  std::vector<Spectrum> w_hat(d, Spectrum(modes)), y_hat(nsym, Spectrum(modes));
  for (std::size_t m = 0; m < modes; ++m) {
    cplx dd[3];
    double lap = 0.0;
    for (int i = 0; i < d; ++i) {
      dd[i] = cplx(0.0, sp.deriv_factor(m, i));
      lap -= sp.deriv_factor(m, i) * sp.deriv_factor(m, i);
    }
    const cplx g0 = g_hat[m];
    const cplx h = lap * g0;  // Delta G
    cplx a_dh = 0.0, a_dg = 0.0;
    for (int i = 0; i < d; ++i) {
      a_dh += a[i] * dd[i] * h;
      a_dg += a[i] * dd[i] * g0;
    }
    for (int i = 0; i < d; ++i) w_hat[i][m] = lap * h * a[i] - dd[i] * a_dh;
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        y_hat[sym_index(d, i, j)][m] = -(a[i] * dd[j] * h + dd[i] * h * a[j]) + 2.0 * dd[i] * dd[j] * a_dg;
      }
    }
  }
  WaveGroup grp{TimeWindow{box.t1, box.t2, box.flat}, VectorField(grid), SymTensorField(grid)};
  for (int i = 0; i < d; ++i) grp.w.comp[i] = sp.backward(w_hat[i]);
  for (int c = 0; c < nsym; ++c) grp.y.comp[c] = sp.backward(y_hat[c]);
  return grp;
}

WavePerturbation perturb_box(const SampledFrame& frame, const Box& box, const FrozenCoefficients& frozen,
                             const ConvintOptions& options, double phase,
                             const std::vector<WaveOrientation>& candidates) {
  const SpaceGrid& sg = frame.space;
  const int d = sg.dim;
  const int freq = options.frequency > 0 ? options.frequency : sg.n / 4;
  const TimeWindow window{box.t1, box.t2, box.flat};
  const std::vector<double>& times = frame.times;

  std::vector<int> samples;
  for (std::size_t j = 0; j < times.size(); ++j)
    if (window.value(times[j]) > 0.0) samples.push_back(static_cast<int>(j));
  if (samples.empty()) throw NoAdmissibleAmplitude("box window contains no time sample");
  std::vector<std::size_t> points;
  for (std::size_t p = 0; p < sg.points(); ++p)
    if (box.contains(sg, p)) points.push_back(p);

  const std::vector<double> q = linear_weights(times, box.t1, box.t2);

  // Spectral derivatives of the cut-off potential leak outside the cell, so
  // the constraint is checked wherever the wave is not negligible.
  auto support = [&](const WaveGroup& wave) {
    double top = 0.0;
    std::vector<double> size(sg.points(), 0.0);
    for (std::size_t p = 0; p < sg.points(); ++p) {
      for (const auto& c : wave.w.comp) size[p] = std::max(size[p], std::abs(c[p]));
      for (const auto& c : wave.y.comp) size[p] = std::max(size[p], std::abs(c[p]));
      top = std::max(top, size[p]);
    }
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < sg.points(); ++p)
      if (box.contains(sg, p) || size[p] > 1e-12 * top) out.push_back(p);
    return out;
  };

  // Constraint at amplitude s (signed) for wave fields (wx, yx).
  std::vector<std::size_t> checked;
  auto feasible_on = [&](const std::vector<std::size_t>& where, double s, const WaveGroup& wave) {
    double m[6];
    double wv[3];
    for (int j : samples) {
      const double t = times[j];
      const double eta = window.value(t), deta = window.d1(t);
      for (std::size_t p : where) {
        for (int i = 0; i < d; ++i) wv[i] = frame.w[j].comp[i][p] + s * eta * wave.w.comp[i][p];
        const double rho = frame.rho[j][p];
        for (int i = 0; i < d; ++i)
          for (int k = i; k < d; ++k) {
            const int c = sym_index(d, i, k);
            m[c] = wv[i] * wv[k] / rho - frame.u[j].comp[c][p] - s * deta * wave.y.comp[c][p];
          }
        if (!(0.5 * d * lambda_max_packed(d, m) < frame.e[j][p])) return false;
      }
    }
    return true;
  };

  double e_box = 0.0, w_box = 0.0;
  for (int j : samples)
    for (std::size_t p : points) {
      e_box = std::max(e_box, frame.e[j][p]);
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += frame.w[j].comp[i][p] * frame.w[j].comp[i][p];
      w_box = std::max(w_box, std::sqrt(s));
    }
  const double v_frozen = std::sqrt(frozen.v[0] * frozen.v[0] + frozen.v[1] * frozen.v[1] + frozen.v[2] * frozen.v[2]);
  const double a_start = std::sqrt(2.0 * frozen.rho * e_box) + v_frozen + w_box + 1e-12;

  WavePerturbation best;
  best.gain = -kInf;
  bool any = false;
  const std::vector<WaveOrientation> tried = candidates.empty() ? orientations(d, freq) : candidates;
  for (const auto& o : tried) {
    WaveGroup wave = wave_fields(sg, box, o, phase);
    checked = support(wave);
    if (!feasible_on(checked, 0.0, wave)) throw NoAdmissibleAmplitude("constraint already saturated in the box");
    // Defect change: sum_j q_j (s c1_j + s^2 c2_j).
    double c1 = 0.0, c2 = 0.0, w2 = 0.0;
    for (std::size_t p = 0; p < sg.points(); ++p)
      for (int i = 0; i < d; ++i) w2 += wave.w.comp[i][p] * wave.w.comp[i][p];
    w2 /= sg.points();
    for (int j : samples) {
      const double eta = window.value(times[j]);
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t p : checked) {
        double ww = 0.0, vw = 0.0;
        for (int i = 0; i < d; ++i) {
          ww += wave.w.comp[i][p] * wave.w.comp[i][p];
          vw += frame.w[j].comp[i][p] * wave.w.comp[i][p];
        }
        s1 += eta * vw / frame.rho[j][p];
        s2 += 0.5 * eta * eta * ww / frame.rho[j][p];
      }
      c1 += q[j] * s1 / sg.points();
      c2 += q[j] * s2 / sg.points();
    }
    const double sign = c1 >= 0.0 ? 1.0 : -1.0;
    double hi = a_start;
    int grow = 0;
    while (feasible_on(points, sign * hi, wave) && grow++ < 60) hi *= 2.0;
    // The feasible amplitudes form an interval (lambda_max is convex), so the
    // cheap search inside the cell bounds the one over the whole support.
    double lo = 0.0;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible_on(points, sign * mid, wave) ? lo : hi) = mid;
    }
    if (!feasible_on(checked, sign * lo, wave)) {
      hi = lo;
      lo = 0.0;
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible_on(checked, sign * mid, wave) ? lo : hi) = mid;
      }
    }
    const double amp = options.safety * lo;
    if (!(amp > 1e-12 * a_start)) continue;
    const double gain = amp * std::abs(c1) + amp * amp * c2;
    if (gain > best.gain) {
      any = true;
      best.gain = gain;
      best.orientation = o;
      best.amplitude = sign * amp;
      double eta2 = 0.0;
      for (int j : samples) eta2 += q[j] * std::pow(window.value(times[j]), 2);
      best.energy = amp * amp * w2 * eta2;
      wave.w = best.amplitude * wave.w;
      wave.y = best.amplitude * wave.y;
      best.group = std::move(wave);
    }
  }
  if (!any) throw NoAdmissibleAmplitude("no direction admits a positive amplitude");
  best.box = box;
  best.phase = phase;

  const Spectral& sp = Spectral::on(sg);
  for (int i = 0; i < d; ++i) {
    const Spectrum s = sp.forward(best.group.w.comp[i]);
    for (std::size_t m = 0; m < sp.modes(); ++m) {
      bool low = true;
      for (int ax = 0; ax < d; ++ax) low = low && std::abs(sp.wavenumber(m, ax)) <= 2;
      if (low) best.weak_pairing = std::max(best.weak_pairing, std::abs(s[m]) / sg.points());
    }
  }
  return best;
}

void GainLedger::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path);
  os.precision(17);
  os << "step,eps,delta,alpha,gain,lambda_hat,beta_hat,i_eps,inf_gap,alpha_e,jensen_floor,boxes,accepted,retries,"
        "fallback\n";
  for (const auto& r : records) {
    os << r.step << ',' << r.eps << ',' << r.delta << ',' << r.alpha << ',' << r.gain << ',' << r.lambda_hat << ','
       << r.beta_hat << ',' << r.i_eps << ',' << r.inf_gap << ',' << r.alpha_e << ',' << r.jensen_floor << ','
       << r.boxes << ',' << r.accepted << ',' << r.retries << ',' << (r.fallback ? 1 : 0) << '\n';
  }
}

StepResult pw1_step(const Problem& problem, const Iterate& current, double eps, double alpha,
                    const ConvintOptions& options, int step_index) {
  const Ansatz& an = problem.ansatz;
  const GridSpec& g = an.grid;
  const double t_final = g.t_final;
  if (!(eps > 0.0 && eps < t_final)) throw InvalidArgument("eps must lie in (0, T)");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");

  const double i_before = I_eps(current.state, eps, an, current.ebar);
  if (!(i_before < -alpha)) throw PreconditionFailed("I_eps = " + std::to_string(i_before) + " is not below -alpha");
  const GapReport before = gap(current.state, an, current.ebar, {eps});
  const double inf_gap = before.inf_gap.front();
  if (!(inf_gap > 0.0)) throw PreconditionFailed("state is not a strict subsolution on [eps, T]");

  const double delta = std::min(options.delta_fraction * inf_gap, alpha / (2.0 * (t_final - eps)));
  std::vector<ScalarField> e = current.ebar;
  double e_sup = 0.0;
  for (int j = 0; j < g.n_time; ++j) {
    if (g.time(j) < eps) continue;
    for (double& x : e[j].data) x -= delta;
    e_sup = std::max(e_sup, max_value(e[j]));
  }

  double v_osc = 0.0;
  for (int j = 0; j < g.n_time; ++j)
    if (g.time(j) >= eps) v_osc = std::max(v_osc, 2.0 * max_norm(an.grad_psi_at(g.time(j))));
  const double eps_osc = epsilon_for_delta(delta, e_sup, an.rho_tilde_min(), an.rho_tilde_max(), v_osc, g.dim);
  BoxDecomposition boxes;
  try {
    boxes = localize(an, eps, t_final, std::isfinite(eps_osc) ? eps_osc : kInf, options);
  } catch (const EpsilonTooSmall&) {
    boxes = finest_decomposition(an, eps, t_final, options);
  }

  const SampledFrame frame = sample_frame(current.state, an, e);

  // Greedy order: largest box-integrated squared gap first.
  const SpaceGrid sg = g.space();
  std::vector<double> weight(boxes.boxes.size(), 0.0);
  for (std::size_t b = 0; b < boxes.boxes.size(); ++b) {
    const Box& box = boxes.boxes[b];
    const std::vector<double> q = linear_weights(g.n_time, g.dt(), box.t1, box.t2);
    for (int j = 0; j < g.n_time; ++j) {
      if (q[j] == 0.0) continue;
      double s = 0.0;
      for (std::size_t p = 0; p < sg.points(); ++p)
        if (box.contains(sg, p)) s += std::pow(before.gap[j][p] - delta, 2);
      weight[b] += q[j] * s / sg.points();
    }
  }
  std::vector<std::size_t> order(boxes.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return weight[x] > weight[y]; });

  std::mt19937_64 rng(options.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(step_index + 1));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
  std::vector<WavePerturbation> accepted;
  for (std::size_t b : order) {
    const double phase = phase_dist(rng);
    try {
      accepted.push_back(perturb_box(frame, boxes.boxes[b], boxes.frozen[b], options, phase));
    } catch (const NoAdmissibleAmplitude&) {
    }
  }
  if (accepted.empty()) throw StepStalled("no box admits a perturbation");

  // Ledger quantities with nonnegative time weights on [eps, T].
  const std::vector<double> q = linear_weights(g.n_time, g.dt(), eps, t_final);
  double alpha_e = 0.0, defect2 = 0.0;
  for (int j = 0; j < g.n_time; ++j) {
    if (q[j] == 0.0) continue;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < sg.points(); ++p) {
      double w2 = 0.0;
      for (int i = 0; i < g.dim; ++i) w2 += frame.w[j].comp[i][p] * frame.w[j].comp[i][p];
      const double f = e[j][p] - 0.5 * w2 / frame.rho[j][p];
      s1 += f;
      s2 += f * f;
    }
    alpha_e += q[j] * s1 / sg.points();
    defect2 += q[j] * s2 / sg.points();
  }

  std::string last_failure = "verification failed";
  for (int r = 0; r <= options.max_retries; ++r) {
    const double scale = std::ldexp(1.0, -r);
    SubsolutionState candidate = current.state;
    double energy = 0.0;
    for (const auto& wp : accepted) {
      candidate.add({wp.group.window, scale * wp.group.w, scale * wp.group.y});
      energy += scale * scale * wp.energy;
    }
    std::optional<Iterate> evaluated;
    try {
      evaluated = evaluate(problem, std::move(candidate));
    } catch (const StepFailure& ex) {
      last_failure = ex.what();
      continue;
    }
    Iterate& next = *evaluated;
    GapReport after = gap(next.state, an, next.ebar, {0.0});
    const double i_after = I_eps(next.state, eps, an, next.ebar);
    if (!after.member) {
      last_failure = "re-verified gap " + std::to_string(after.inf_gap.front()) + " is not positive";
      continue;
    }
    if (!(i_after > i_before)) {
      last_failure = "I_eps did not increase";
      continue;
    }
    StepResult out{std::move(next), {}, std::move(after), accepted};
    GainRecord& rec = out.record;
    rec.step = step_index;
    rec.eps = eps;
    rec.delta = delta;
    rec.alpha = -i_before;
    rec.alpha_e = alpha_e;
    rec.gain = energy;
    rec.lambda_hat = defect2 > 0.0 ? energy / defect2 : 0.0;
    rec.beta_hat = i_after - i_before;
    rec.jensen_floor = rec.lambda_hat * alpha_e * alpha_e / (t_final - eps);
    rec.i_eps = i_after;
    rec.inf_gap = out.gap.inf_gap.front();
    rec.boxes = static_cast<int>(boxes.boxes.size());
    rec.accepted = static_cast<int>(accepted.size());
    rec.retries = r;
    rec.fallback = boxes.fallback;
    for (auto& wp : out.accepted) {
      wp.amplitude *= scale;
      wp.energy *= scale * scale;
      wp.gain *= scale;
      wp.weak_pairing *= scale;
      wp.group.w = scale * wp.group.w;
      wp.group.y = scale * wp.group.y;
    }
    return out;
  }
  throw StepStalled(last_failure);
}

IterateResult iterate(const Problem& problem, const Iterate& initial, const Schedule& schedule,
                      const ConvintOptions& options) {
  const GridSpec& g = problem.ansatz.grid;
  if (!(schedule.eps > 0.0 && schedule.eps < g.t_final)) throw InvalidArgument("eps must lie in (0, T)");
  if (schedule.max_steps < 0) throw InvalidArgument("step budget must be nonnegative");

  IterateResult res;
  res.trajectory.push_back(initial);
  res.i_eps.push_back(I_eps(initial.state, schedule.eps, problem.ansatz, initial.ebar));
  for (int k = 1; k <= schedule.max_steps; ++k) {
    const double cur = res.i_eps.back();
    if (std::abs(cur) < schedule.stop_tolerance) break;
    try {
      StepResult step = pw1_step(problem, res.trajectory.back(), schedule.eps, 0.5 * std::abs(cur), options, k);
      res.ledger.records.push_back(step.record);
      res.i_eps.push_back(step.record.i_eps);
      res.trajectory.push_back(std::move(step.next));
    } catch (const StepStalled& ex) {
      res.stalled = true;
      res.stall_reason = ex.what();
      break;
    }
  }
  const Iterate& last = res.trajectory.back();
  res.final_defect = std::abs(res.i_eps.back());
  const GapReport gr = gap(last.state, problem.ansatz, last.ebar, {0.0});
  res.gap_min = gr.inf_gap.front();
  std::vector<double> means;
  for (const auto& f : gr.gap) means.push_back(mean(f));
  res.gap_mean = mean_of(means);
  return res;
}

}  // namespace wildgas
