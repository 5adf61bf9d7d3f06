#include "wildgas/dissipdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "wildgas/errors.hpp"
#include "wildgas/presets.hpp"
#include "wildgas/quadrature.hpp"
#include "wildgas/spectral.hpp"
#include "wildgas/subsolution.hpp"

namespace wildgas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double kinetic(const VectorField& w, const ScalarField& rho) {
  const int d = w.grid.dim;
  double s = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    double ww = 0.0;
    for (int i = 0; i < d; ++i) ww += w.comp[i][p] * w.comp[i][p];
    s += 0.5 * ww / rho[p];
  }
  return s / rho.size();
}

double pairing(const VectorField& a, const VectorField& b, const ScalarField& rho) {
  const int d = a.grid.dim;
  double s = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    double ab = 0.0;
    for (int i = 0; i < d; ++i) ab += a.comp[i][p] * b.comp[i][p];
    s += ab / rho[p];
  }
  return s / rho.size();
}

// (d/2) lambda_max(w (x) w / rho - U) at every grid point.
ScalarField constraint_value(const VectorField& w, const SymTensorField& u, const ScalarField& rho) {
  const int d = w.grid.dim;
  ScalarField r(w.grid);
  std::array<double, 3> wv{};
  for (std::size_t p = 0; p < rho.size(); ++p) {
    for (int i = 0; i < d; ++i) wv[i] = w.comp[i][p];
    SymMatrix m = SymMatrix::outer(std::span<const double>(wv.data(), d));
    m = (1.0 / rho[p]) * m - SymMatrix::at(u, p);
    r[p] = 0.5 * d * lambda_max(m);
  }
  return r;
}

void require_solenoidal(const VectorField& v) {
  const double div = max_abs(divergence(v));
  if (div > 1e-9 * (1.0 + max_norm(v))) throw NotSolenoidal("max |div v0| = " + std::to_string(div));
}

// Composite Simpson over [a, b] with an odd number of points.
template <typename F>
double simpson(F f, double a, double b, int points) {
  if (points % 2 == 0) ++points;
  const int n = points - 1;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

double choose_chi0(const VectorField& v0, const ScalarField& rho0, const ScalarField& theta0, double margin) {
  if (margin < 0.0) throw InvalidArgument("margin must be nonnegative");
  require_same_grid(v0.grid, rho0.grid);
  require_same_grid(v0.grid, theta0.grid);
  require_solenoidal(v0);
  const int d = v0.grid.dim;
  double sup = -kInf;
  for (std::size_t p = 0; p < rho0.size(); ++p) {
    if (!(rho0[p] > 0.0)) throw NonPositiveInitial("rho0 must be positive");
    double ww = 0.0;
    for (int i = 0; i < d; ++i) ww += v0.comp[i][p] * v0.comp[i][p];
    sup = std::max(sup, 0.5 * d * ww / rho0[p] + 1.5 * rho0[p] * theta0[p]);
  }
  return (1.0 + margin) * sup;
}

double ChiProfile::operator()(double t) const {
  if (t <= peak) return chi0 + (chi_bar - chi0) * t / peak;
  return chi_bar - 2.0 * k * (t - peak);
}

double ChiProfile::slope(double t) const { return t <= peak ? (chi_bar - chi0) / peak : -2.0 * k; }

ChiProfile build_chi(double chi0, double chi_bar, double k, double t_final) {
  if (!(chi0 > 0.0)) throw InvalidArgument("chi0 must be positive");
  if (!(chi_bar > 2.0 * chi0)) throw InvalidArgument("chi_bar must exceed 2 chi0");
  if (!(k > 0.0)) throw InvalidArgument("slope K must be positive");
  if (!(t_final > 0.0)) throw InvalidArgument("T must be positive");
  const double peak = t_final - (chi_bar - chi0) / (2.0 * k);
  if (!(peak > 0.0)) {
    throw InfeasibleProfile("descent from chi_bar to chi0 with slope 2K needs " +
                            std::to_string((chi_bar - chi0) / (2.0 * k)) + " > T; use K >= " +
                            std::to_string((chi_bar - chi0) / (2.0 * t_final)));
  }
  return {chi0, chi_bar, k, peak, t_final};
}

std::vector<std::array<int, 3>> separated_wave_vectors(const SpaceGrid& grid, int separation) {
  const int d = grid.dim;
  const int kmax = grid.n / 3;
  std::vector<std::array<int, 3>> all;
  const int kz = d == 3 ? kmax : 0;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -kmax; b <= kmax; ++b)
      for (int c = -kz; c <= kz; ++c) {
        const std::array<int, 3> k{a, b, c};
        // One representative per +-k.
        int first = 0;
        for (int x : k)
          if (x != 0) {
            first = x;
            break;
          }
        if (first <= 0) continue;
        const int inf = std::max({std::abs(a), std::abs(b), std::abs(c)});
        if (inf >= separation) all.push_back(k);
      }
  auto norm2 = [](const std::array<int, 3>& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; };
  std::stable_sort(all.begin(), all.end(), [&](const auto& x, const auto& y) { return norm2(x) < norm2(y); });
  std::vector<std::array<int, 3>> chosen;
  for (const auto& k : all) {
    bool ok = true;
    for (const auto& c : chosen) {
      int diff = 0, sum = 0;
      for (int i = 0; i < 3; ++i) {
        diff = std::max(diff, std::abs(k[i] - c[i]));
        sum = std::max(sum, std::abs(k[i] + c[i]));
      }
      ok = ok && diff >= separation && sum >= separation;
    }
    if (ok) chosen.push_back(k);
  }
  return chosen;
}

RecursionResult lemma_a2_recursion(const VectorField& v0, const ScalarField& rho0, const BudgetField& e,
                                   double t_final, int depth, const RecursionOptions& o) {
  const SpaceGrid& sg = v0.grid;
  const int d = sg.dim;
  require_same_grid(sg, rho0.grid);
  if (depth < 0) throw InvalidArgument("depth must be nonnegative");
  if (!(o.eps0 > 0.0 && o.tau - o.eps0 > 0.0 && o.tau + o.eps0 < t_final))
    throw InvalidArgument("initial window must lie inside (0, T)");
  if (o.samples_per_window < 4 || o.samples_per_window % 2) throw InvalidArgument("samples_per_window must be even");
  require_solenoidal(v0);

  // v0 must lie strictly inside the constraint on [0, T].
  {
    const ScalarField base = constraint_value(v0, SymTensorField(sg), rho0);
    for (int j = 0; j <= 256; ++j) {
      const double t = t_final * j / 256;
      const ScalarField ej = e(t);
      for (std::size_t p = 0; p < base.size(); ++p)
        if (!(base[p] < ej[p]))
          throw PreconditionFailed("v0 violates the constraint at t = " + std::to_string(t));
    }
  }

  const WeakTopologyMetric metric(sg);
  const std::vector<std::array<int, 3>> vectors = separated_wave_vectors(sg, o.wave_separation);
  std::vector<bool> used(vectors.size(), false);

  RecursionResult res;
  res.levels.emplace_back(v0);
  RecursionLevel row0;
  row0.tau = o.tau;
  row0.eps = o.eps0;
  row0.kinetic = kinetic(v0, rho0);
  row0.defect = integrate(e(o.tau)) - row0.kinetic;
  res.ledger.push_back(row0);
  res.tau_bar = o.tau;

  ConvintOptions wave_options;
  wave_options.safety = o.safety;
  wave_options.seed = o.seed;
  const FrozenCoefficients frozen{max_value(rho0), {0, 0, 0}};
  const int half = o.samples_per_window / 2;

  for (int k = 1; k <= depth; ++k) {
    const SubsolutionState& prev = res.levels.back();
    const RecursionLevel& last = res.ledger.back();
    const double tau = last.tau;
    const double bound = std::ldexp(1.0, -k);
    double eps = 0.99 * last.eps / 2.0;
    bool accepted = false;
    std::string reason = "no admissible window";

    for (int halving = 0; halving <= o.max_halvings && !accepted; ++halving, eps *= 0.5) {
      const double t1 = tau - eps, t2 = tau + eps;
      SampledFrame frame;
      frame.space = sg;
      std::vector<double> ke_prev;
      for (int i = 0; i <= 2 * half; ++i) {
        const double t = i == half ? tau : tau + eps * (static_cast<double>(i) / half - 1.0);
        frame.times.push_back(t);
        frame.w.push_back(prev.v(t));
        frame.u.push_back(prev.U(t));
        frame.rho.push_back(rho0);
        frame.e.push_back(e(t));
        ke_prev.push_back(kinetic(frame.w.back(), rho0));
      }
      const double alpha = simpson(
          [&](double t) { return integrate(e(t)) - kinetic(prev.v(t), rho0); }, t1, t2, o.quadrature_points);
      if (!(alpha > 0.0)) throw StallAtLevel(k, "no room left below the constraint");
      const std::vector<double> q = linear_weights(frame.times, t1, t2);
      double ke_mean = 0.0, ke_max = -kInf, ke_min = kInf;
      for (std::size_t i = 0; i < q.size(); ++i) {
        ke_mean += q[i] * ke_prev[i];
        ke_max = std::max(ke_max, ke_prev[i]);
        ke_min = std::min(ke_min, ke_prev[i]);
      }
      ke_mean /= 2.0 * eps;

      for (std::size_t c = 0; c < vectors.size() && !accepted; ++c) {
        if (used[c]) continue;
        Box box;
        box.t1 = t1;
        box.t2 = t2;
        box.m = 0;
        box.flat = o.plateau;
        WavePerturbation wp;
        try {
          wp = perturb_box(frame, box, frozen, wave_options, 0.0, {lattice_orientation(vectors[c], d)});
        } catch (const NoAdmissibleAmplitude& ex) {
          reason = ex.what();
          continue;
        }
        // Shrink until the level stays weakly close to the previous ones.
        double scale = 1.0, dist = 0.0, pair = 0.0;
        bool close = false;
        for (int s = 0; s <= o.max_shrinks && !close; ++s, scale *= 0.5) {
          dist = 0.0;
          pair = 0.0;
          for (std::size_t i = 0; i < frame.times.size(); ++i) {
            const double eta = wp.group.window.value(frame.times[i]);
            if (eta == 0.0) continue;
            const VectorField diff = (scale * eta) * wp.group.w;
            dist = std::max(dist, metric.distance(diff, VectorField(sg)));
            for (const auto& lvl : res.levels)
              pair = std::max(pair, std::abs(pairing(diff, lvl.v(frame.times[i]), rho0)));
          }
          close = dist < bound && pair < bound;
          if (close) break;
        }
        if (!close) {
          reason = "weak closeness bound not met";
          continue;
        }
        WaveGroup group = wp.group;
        group.w = scale * group.w;
        group.y = scale * group.y;
        SubsolutionState next = prev;
        next.add(group);

        std::vector<double> ke_next;
        for (double t : frame.times) ke_next.push_back(kinetic(next.v(t), rho0));
        double gain_int = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) gain_int += q[i] * (ke_next[i] - ke_prev[i]);
        const double big_lambda = 2.0 * eps * gain_int / (alpha * alpha);
        const double unit = big_lambda * alpha * alpha / (eps * eps);
        const bool mean_ok = ke_mean + unit / 4.0 >= ke_max + unit / 8.0;
        const bool floor_ok = ke_min + unit / 8.0 >= ke_prev[half] + unit / 16.0;
        if (!(big_lambda > 0.0) || !mean_ok || !floor_ok) {
          reason = "window too wide for the measured gain";
          break;  // a narrower window is needed, not another direction
        }
        // New peak: interior argmax of the kinetic energy; values within
        // round-off of the maximum tie and go to the sample nearest the centre.
        double ke_top = -kInf;
        for (std::size_t i = 1; i + 1 < ke_next.size(); ++i) ke_top = std::max(ke_top, ke_next[i]);
        std::size_t arg = 0;
        for (std::size_t i = 1; i + 1 < ke_next.size(); ++i) {
          if (ke_next[i] < ke_top - 1e-12 * std::abs(ke_top)) continue;
          const auto off = [&](std::size_t j) { return std::abs(static_cast<long>(j) - half); };
          if (arg == 0 || off(i) < off(arg)) arg = i;
        }
        const double tau_k = frame.times[arg];
        const double lambda_hat = big_lambda / 16.0;
        const double defect = integrate(e(tau_k)) - ke_next[arg];
        if (!(ke_next[arg] >= ke_max + lambda_hat * alpha * alpha / (eps * eps)) || !(defect < last.defect)) {
          reason = "staircase step too small";
          break;
        }
        RecursionLevel row;
        row.k = k;
        row.tau = tau_k;
        row.eps = eps;
        row.alpha = alpha;
        row.lambda_hat = lambda_hat;
        row.kinetic = ke_next[arg];
        row.defect = defect;
        row.metric_step = dist;
        row.pairing = pair;
        row.wave_vector = vectors[c];
        row.amplitude = wp.amplitude * scale;
        row.halvings = halving;
        used[c] = true;
        res.levels.push_back(std::move(next));
        res.ledger.push_back(row);
        res.tau_bar = tau_k;
        accepted = true;
      }
    }
    if (!accepted) throw StallAtLevel(k, reason);
  }
  return res;
}

void write_staircase_csv(const std::string& path, const std::vector<RecursionLevel>& ledger) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path);
  os.precision(17);
  os << "k,tau,eps,alpha,kinetic,defect,lambda_hat,metric_step,pairing\n";
  for (const auto& r : ledger) {
    os << r.k << ',' << r.tau << ',' << r.eps << ',' << r.alpha << ',' << r.kinetic << ',' << r.defect << ','
       << r.lambda_hat << ',' << r.metric_step << ',' << r.pairing << '\n';
  }
}

double dissipative_knee(double chi_tau, double chi0, double k) {
  if (!(k > 0.0)) throw InvalidArgument("slope K must be positive");
  return (chi_tau - chi0) / k;
}

ScalarField dissipative_budget(double t, double chi_tau, double chi0, double k, const ScalarField& rho0,
                               const ScalarField& theta0) {
  const double level = t < dissipative_knee(chi_tau, chi0, k) ? chi_tau - k * t : chi0;
  ScalarField r(rho0.grid);
  for (std::size_t p = 0; p < r.size(); ++p) r[p] = level - 1.5 * rho0[p] * theta0[p];
  return r;
}

AdmissibilityReport admissibility_check(const SubsolutionState& w, const TemperatureSolve& theta,
                                        const ScalarField& rho0, const ScalarField& theta0, double chi_tau,
                                        double chi0, double k) {
  const GridSpec& g = theta.grid;
  AdmissibilityReport r;
  r.k = k;
  r.margin = kInf;
  r.gap_min = kInf;
  const double knee = dissipative_knee(chi_tau, chi0, k);
  for (int j = 1; j < g.n_time; ++j) {
    const double t = g.time(j);
    const ScalarField& th = theta.theta[j];
    const ScalarField e = dissipative_budget(t, chi_tau, chi0, k, rho0, theta0);
    const VectorField wv = w.v(t);
    const double w_inf = max_norm(wv);
    const ScalarField lam = constraint_value(wv, w.U(t), rho0);
    for (std::size_t p = 0; p < th.size(); ++p) {
      const double ebar = chi_tau - 1.5 * rho0[p] * th[p];
      if (ebar - e[p] < r.margin) {
        r.margin = ebar - e[p];
        r.t_worst = t;
        r.p_worst = p;
      }
      r.gap_min = std::min(r.gap_min, ebar - lam[p]);
      r.c_hat = std::max(r.c_hat, std::abs(th[p] - theta0[p]) / ((1.0 + w_inf) * t));
      if (t < knee) r.k_min = std::max(r.k_min, 1.5 * rho0[p] * (th[p] - theta0[p]) / t);
    }
  }
  r.passed = r.margin > 0.0;
  return r;
}

void require_admissible(const AdmissibilityReport& r) {
  if (r.passed) return;
  throw AdmissibilityFailed("margin " + std::to_string(r.margin) + " at t = " + std::to_string(r.t_worst) +
                            " with K = " + std::to_string(r.k) + "; try K >= " + std::to_string(2.0 * r.k_min));
}

double energy_identity(const std::vector<double>& times, const std::vector<VectorField>& w, const ScalarField& rho0,
                       const std::vector<ScalarField>& theta, const std::function<double(double)>& chi) {
  if (times.size() != w.size() || times.size() != theta.size())
    throw GridMismatch("energy identity needs one velocity and temperature per time");
  double worst = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    double internal = 0.0;
    for (std::size_t p = 0; p < rho0.size(); ++p) internal += 1.5 * rho0[p] * theta[j][p];
    const double energy = kinetic(w[j], rho0) + internal / rho0.size();
    worst = std::max(worst, std::abs(energy - chi(times[j])));
  }
  return worst;
}

std::vector<VectorField> saturated_velocity(const std::vector<double>& times, const ScalarField& rho0,
                                            const std::vector<ScalarField>& theta,
                                            const std::function<double(double)>& chi,
                                            const std::array<double, 3>& direction) {
  const SpaceGrid& sg = rho0.grid;
  const int d = sg.dim;
  double n2 = 0.0;
  for (int i = 0; i < d; ++i) n2 += direction[i] * direction[i];
  if (!(n2 > 0.0)) throw InvalidArgument("direction must be nonzero");
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<VectorField> out;
  for (std::size_t j = 0; j < times.size(); ++j) {
    VectorField v(sg);
    const double c = chi(times[j]);
    for (std::size_t p = 0; p < rho0.size(); ++p) {
      const double room = c - 1.5 * rho0[p] * theta[j][p];
      if (room < 0.0) throw PreconditionFailed("chi below the internal energy at t = " + std::to_string(times[j]));
      const double speed = std::sqrt(2.0 * rho0[p] * room);
      for (int i = 0; i < d; ++i) v.comp[i][p] = speed * direction[i] * inv;
    }
    out.push_back(std::move(v));
  }
  return out;
}

DissipativeResult build_dissipative_data(const DissipativeConfig& c) {
  const SpaceGrid sg{c.dim, c.n_space};
  const InitialData data = c.data ? *c.data : make_preset(c.preset, sg);
  VectorField v0(sg);
  for (int i = 0; i < c.dim; ++i)
    for (std::size_t p = 0; p < v0.comp[i].size(); ++p) v0.comp[i][p] = data.rho0[p] * data.u0.comp[i][p];
  require_solenoidal(v0);

  DissipativeResult r{};
  r.chi0 = choose_chi0(v0, data.rho0, data.theta0, c.margin);
  {
    const GridSpec g{c.dim, c.n_space, c.n_time, c.t_final};
    const Ansatz a = build_ansatz(g, data.rho0, data.u0);
    r.theta_bar = comparison_bounds(a, data.theta0).theta_hi;
  }
  r.chi_bar = c.chi_bar > 0.0 ? c.chi_bar : std::max(2.5 * r.chi0, 4.0 * 1.5 * max_value(data.rho0) * r.theta_bar);

  const double k_feasible = (r.chi_bar - r.chi0) / (2.0 * c.t_final);
  double k = c.k > 0.0 ? c.k : 2.0 * k_feasible;
  const int rounds = c.k > 0.0 ? 1 : c.max_k_rounds;
  for (int round = 1; round <= rounds; ++round) {
    r.k_rounds = round;
    r.profile = build_chi(r.chi0, r.chi_bar, k, c.t_final);
    const ChiProfile prof = r.profile;
    const ScalarField rho0 = data.rho0, theta0 = data.theta0;
    const BudgetField e = [prof, rho0, theta0](double t) {
      ScalarField f(rho0.grid);
      const double level = prof(t);
      for (std::size_t p = 0; p < f.size(); ++p) f[p] = level - 1.5 * rho0[p] * theta0[p];
      return f;
    };
    const double tau = c.tau > 0.0 ? c.tau : prof.peak + 0.25 * (c.t_final - prof.peak);
    if (!(tau > prof.peak && tau < c.t_final)) throw InvalidArgument("tau must lie between the peak and T");
    RecursionOptions ro = c.recursion;
    ro.tau = tau;
    ro.eps0 = 0.8 * std::min(tau - prof.peak, c.t_final - tau);
    r.recursion = lemma_a2_recursion(v0, data.rho0, e, c.t_final, c.depth, ro);
    r.tau_bar = r.recursion.tau_bar;
    r.chi_tau = prof(r.tau_bar);

    const GridSpec g{c.dim, c.n_space, c.n_time, c.t_final - r.tau_bar};
    r.ansatz = build_ansatz(g, data.rho0, data.u0);
    r.shifted = r.recursion.final_state().shifted(r.tau_bar);
    r.theta = solve_theta(*r.shifted, r.ansatz, data.theta0, c.heat);
    r.admissibility = admissibility_check(*r.shifted, r.theta, data.rho0, data.theta0, r.chi_tau, r.chi0, k);
    if (r.admissibility.passed || round == rounds) break;
    k = std::max(2.0 * k, 2.0 * r.admissibility.k_min);
  }
  require_admissible(r.admissibility);
  r.forced = admissibility_check(*r.shifted, r.theta, data.rho0, data.theta0, r.chi_tau, r.chi0, k / 100.0);

  const GridSpec& g = r.theta.grid;
  std::vector<double> times;
  std::vector<VectorField> w;
  for (int j = 0; j < g.n_time; ++j) {
    times.push_back(g.time(j));
    w.push_back(r.shifted->v(g.time(j)));
  }
  const double chi_tau = r.chi_tau;
  const auto flat = [chi_tau](double) { return chi_tau; };
  r.energy_defect = energy_identity(times, w, data.rho0, r.theta.theta, flat);
  const auto sat = saturated_velocity(times, data.rho0, r.theta.theta, flat, {1.0, 0.0, 0.0});
  r.saturated_defect = energy_identity(times, sat, data.rho0, r.theta.theta, flat);
  return r;
}

}  // namespace wildgas
