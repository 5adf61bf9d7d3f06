#include "wildgas/relent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wildgas/errors.hpp"
#include "wildgas/quadrature.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {

namespace {

constexpr double kPi = Spectral::kPi;

struct Mode {
  ScalarField value;
  VectorField grad;
};

Mode mode_field(const SpaceGrid& g, const TestFunction& tf) {
  Mode m{ScalarField(g), VectorField(g)};
  for (std::size_t p = 0; p < g.points(); ++p) {
    double arg = 0.0;
    for (int a = 0; a < g.dim; ++a) arg += 2.0 * kPi * tf.k[a] * g.coord(p, a);
    const double c = std::cos(arg), s = std::sin(arg);
    m.value[p] = (tf.shifted ? 1.0 : 0.0) + (tf.sine ? s : c);
    for (int a = 0; a < g.dim; ++a) m.grad.comp[a][p] = 2.0 * kPi * tf.k[a] * (tf.sine ? c : -s);
  }
  return m;
}

double zeta(const TestFunction& tf, double t, double t_final) {
  const double s = t / t_final;
  return std::pow(1.0 - s, 3) * std::pow(s, tf.power);
}

double zeta_dt(const TestFunction& tf, double t, double t_final) {
  const double s = t / t_final;
  double d = -3.0 * std::pow(1.0 - s, 2) * std::pow(s, tf.power);
  if (tf.power > 0) d += std::pow(1.0 - s, 3) * tf.power * std::pow(s, tf.power - 1);
  return d / t_final;
}

double time_integral(const std::vector<double>& f, const GridSpec& g) {
  return sample_integral(f, g.dt(), 0.0, g.t_final);
}

// Cumulative integrals int_0^{t_j}.
std::vector<double> cumulative(const std::vector<double>& f, const GridSpec& g) {
  std::vector<double> r(f.size(), 0.0);
  for (std::size_t j = 1; j < f.size(); ++j) r[j] = sample_integral(f, g.dt(), 0.0, g.time(static_cast<int>(j)));
  return r;
}

}  // namespace

void GasState::validate() const {
  const std::size_t n = static_cast<std::size_t>(grid.n_time);
  if (rho.size() != n || theta.size() != n || u.size() != n) throw GridMismatch("one sample per time required");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(min_value(rho[j]) > 0.0)) throw NonPositiveState("density not positive at sample " + std::to_string(j));
    if (!(min_value(theta[j]) > 0.0))
      throw NonPositiveState("temperature not positive at sample " + std::to_string(j));
  }
}

GasState constant_state(const GridSpec& grid, const ScalarField& rho, const ScalarField& theta, const VectorField& u) {
  GasState s{grid, {}, {}, {}};
  for (int j = 0; j < grid.n_time; ++j) {
    s.rho.push_back(rho);
    s.theta.push_back(theta);
    s.u.push_back(u);
  }
  return s;
}

double pressure(double rho, double theta) { return rho * theta; }
double internal_energy(double theta) { return 1.5 * theta; }
double entropy(double rho, double theta) { return 1.5 * std::log(theta) - std::log(rho); }

double ballistic_free_energy(double rho, double theta, double big_theta) {
  return rho * (1.5 * theta - big_theta * entropy(rho, theta));
}

double ballistic_free_energy_drho(double rho, double theta, double big_theta) {
  return 1.5 * theta - big_theta * entropy(rho, theta) + big_theta;
}

Constitutive constitutive(const ScalarField& rho, const ScalarField& theta) {
  require_same_grid(rho.grid, theta.grid);
  Constitutive c{ScalarField(rho.grid), ScalarField(rho.grid), ScalarField(rho.grid)};
  for (std::size_t p = 0; p < rho.size(); ++p) {
    if (!(rho[p] > 0.0 && theta[p] > 0.0)) throw NonPositiveState("density and temperature must be positive");
    c.p[p] = pressure(rho[p], theta[p]);
    c.e[p] = internal_energy(theta[p]);
    c.s[p] = entropy(rho[p], theta[p]);
  }
  return c;
}

std::vector<TestFunction> test_family(int dim, int kmax, bool momentum, bool nonnegative) {
  std::vector<TestFunction> base;
  const int kz = dim == 3 ? kmax : 0;
  for (int power = 0; power <= 1; ++power) {
    TestFunction constant;
    constant.power = power;
    constant.shifted = nonnegative;
    base.push_back(constant);
    for (int a = -kmax; a <= kmax; ++a)
      for (int b = -kmax; b <= kmax; ++b)
        for (int c = -kz; c <= kz; ++c) {
          const std::array<int, 3> k{a, b, c};
          int first = 0;
          for (int x : k)
            if (x != 0) {
              first = x;
              break;
            }
          if (first <= 0) continue;
          for (bool sine : {false, true}) {
            TestFunction tf;
            tf.k = k;
            tf.sine = sine;
            tf.power = power;
            tf.shifted = nonnegative;
            base.push_back(tf);
          }
        }
  }
  if (!momentum) return base;
  std::vector<TestFunction> out;
  for (int axis = 0; axis < dim; ++axis)
    for (TestFunction tf : base) {
      tf.axis = axis;
      out.push_back(tf);
    }
  return out;
}

WeakResiduals weak_residuals(const GasState& s, int kmax) {
  s.validate();
  const GridSpec& g = s.grid;
  const SpaceGrid sg = g.space();
  const int d = g.dim;
  const int nt = g.n_time;
  WeakResiduals r;
  r.scalar_tests = test_family(d, kmax);
  r.vector_tests = test_family(d, kmax, true);

  // Per-sample ingredients shared by every test.
  std::vector<ScalarField> p(nt, ScalarField(sg)), div_u;
  std::vector<VectorField> m(nt, VectorField(sg)), grad_theta;
  for (int j = 0; j < nt; ++j) {
    for (std::size_t q = 0; q < sg.points(); ++q) p[j][q] = s.rho[j][q] * s.theta[j][q];
    for (int a = 0; a < d; ++a)
      for (std::size_t q = 0; q < sg.points(); ++q) m[j].comp[a][q] = s.rho[j][q] * s.u[j].comp[a][q];
    div_u.push_back(divergence(s.u[j]));
    grad_theta.push_back(gradient(s.theta[j]));
  }

  for (const auto& tf : r.scalar_tests) {
    const Mode md = mode_field(sg, tf);
    std::vector<double> fm(nt), fe(nt);
    for (int j = 0; j < nt; ++j) {
      const double t = g.time(j);
      const double z = zeta(tf, t, g.t_final), zt = zeta_dt(tf, t, g.t_final);
      double mass = 0.0, energy = 0.0;
      for (std::size_t q = 0; q < sg.points(); ++q) {
        double mg = 0.0, tg = 0.0;
        for (int a = 0; a < d; ++a) {
          mg += m[j].comp[a][q] * md.grad.comp[a][q];
          tg += grad_theta[j].comp[a][q] * md.grad.comp[a][q];
        }
        mass += s.rho[j][q] * zt * md.value[q] + z * mg;
        energy += 1.5 * (p[j][q] * zt * md.value[q] + z * p[j][q] / s.rho[j][q] * mg) - z * tg -
                  z * p[j][q] * div_u[j][q] * md.value[q];
      }
      fm[j] = mass / sg.points();
      fe[j] = energy / sg.points();
    }
    const double z0 = zeta(tf, 0.0, g.t_final);
    double init_m = 0.0, init_e = 0.0;
    for (std::size_t q = 0; q < sg.points(); ++q) {
      init_m += s.rho[0][q] * md.value[q];
      init_e += 1.5 * p[0][q] * md.value[q];
    }
    r.mass.push_back(time_integral(fm, g) + z0 * init_m / sg.points());
    r.energy.push_back(time_integral(fe, g) + z0 * init_e / sg.points());
  }

  for (const auto& tf : r.vector_tests) {
    const Mode md = mode_field(sg, tf);
    const int i = tf.axis;
    std::vector<double> f(nt);
    for (int j = 0; j < nt; ++j) {
      const double t = g.time(j);
      const double z = zeta(tf, t, g.t_final), zt = zeta_dt(tf, t, g.t_final);
      double acc = 0.0;
      for (std::size_t q = 0; q < sg.points(); ++q) {
        double ug = 0.0;
        for (int a = 0; a < d; ++a) ug += s.u[j].comp[a][q] * md.grad.comp[a][q];
        acc += m[j].comp[i][q] * zt * md.value[q] + z * m[j].comp[i][q] * ug + z * p[j][q] * md.grad.comp[i][q];
      }
      f[j] = acc / sg.points();
    }
    double init = 0.0;
    for (std::size_t q = 0; q < sg.points(); ++q) init += m[0].comp[i][q] * md.value[q];
    r.momentum.push_back(time_integral(f, g) + zeta(tf, 0.0, g.t_final) * init / sg.points());
  }

  auto max_abs_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  r.max_mass = max_abs_of(r.mass);
  r.max_momentum = max_abs_of(r.momentum);
  r.max_energy = max_abs_of(r.energy);
  return r;
}

EnergyAudit total_energy(const GasState& s) {
  s.validate();
  EnergyAudit a;
  const int d = s.grid.dim;
  for (int j = 0; j < s.grid.n_time; ++j) {
    double e = 0.0;
    for (std::size_t q = 0; q < s.rho[j].size(); ++q) {
      double uu = 0.0;
      for (int i = 0; i < d; ++i) uu += s.u[j].comp[i][q] * s.u[j].comp[i][q];
      e += s.rho[j][q] * (0.5 * uu + internal_energy(s.theta[j][q]));
    }
    a.energy.push_back(e / s.rho[j].size());
  }
  for (double e : a.energy) a.defect = std::max(a.defect, std::abs(e - a.energy.front()));
  return a;
}

EntropyAudit entropy_inequality_residual(const GasState& s, int kmax) {
  s.validate();
  const GridSpec& g = s.grid;
  const SpaceGrid sg = g.space();
  const int d = g.dim;
  const int nt = g.n_time;
  EntropyAudit a;
  a.tests = test_family(d, kmax, false, true);
  std::vector<ScalarField> rho_s(nt, ScalarField(sg)), prod(nt, ScalarField(sg));
  std::vector<VectorField> flux(nt, VectorField(sg));
  for (int j = 0; j < nt; ++j) {
    const VectorField gt = gradient(s.theta[j]);
    for (std::size_t q = 0; q < sg.points(); ++q) {
      rho_s[j][q] = s.rho[j][q] * entropy(s.rho[j][q], s.theta[j][q]);
      double g2 = 0.0;
      for (int i = 0; i < d; ++i) {
        flux[j].comp[i][q] = gt.comp[i][q] / s.theta[j][q];
        g2 += flux[j].comp[i][q] * flux[j].comp[i][q];
      }
      prod[j][q] = g2;
    }
  }
  a.min_production = std::numeric_limits<double>::infinity();
  for (const auto& tf : a.tests) {
    const Mode md = mode_field(sg, tf);
    std::vector<double> f(nt);
    for (int j = 0; j < nt; ++j) {
      const double t = g.time(j);
      const double z = zeta(tf, t, g.t_final), zt = zeta_dt(tf, t, g.t_final);
      double acc = 0.0;
      for (std::size_t q = 0; q < sg.points(); ++q) {
        double ug = 0.0, fg = 0.0;
        for (int i = 0; i < d; ++i) {
          ug += s.u[j].comp[i][q] * md.grad.comp[i][q];
          fg += flux[j].comp[i][q] * md.grad.comp[i][q];
        }
        acc += -rho_s[j][q] * (zt * md.value[q] + z * ug) + z * fg - z * prod[j][q] * md.value[q];
      }
      f[j] = acc / sg.points();
    }
    double init = 0.0;
    for (std::size_t q = 0; q < sg.points(); ++q) init += rho_s[0][q] * md.value[q];
    const double value = time_integral(f, g) - zeta(tf, 0.0, g.t_final) * init / sg.points();
    a.production.push_back(value);
    a.min_production = std::min(a.min_production, value);
  }
  return a;
}

std::vector<double> rel_entropy(const GasState& s, const GasState& ref) {
  s.validate();
  ref.validate();
  if (!(s.grid == ref.grid)) throw GridMismatch("state and reference must share the grid");
  const int d = s.grid.dim;
  std::vector<double> out;
  for (int j = 0; j < s.grid.n_time; ++j) {
    double acc = 0.0;
    for (std::size_t q = 0; q < s.rho[j].size(); ++q) {
      const double rho = s.rho[j][q], th = s.theta[j][q];
      const double r = ref.rho[j][q], big = ref.theta[j][q];
      double du = 0.0;
      for (int i = 0; i < d; ++i) du += std::pow(s.u[j].comp[i][q] - ref.u[j].comp[i][q], 2);
      acc += 0.5 * rho * du + ballistic_free_energy(rho, th, big) -
             ballistic_free_energy_drho(r, big, big) * (rho - r) - ballistic_free_energy(r, big, big);
    }
    out.push_back(acc / s.rho[j].size());
  }
  return out;
}

RelEntropyReport rel_entropy_inequality_residual(const GasState& s, const GasState& ref) {
  const std::vector<double> value = rel_entropy(s, ref);
  const GridSpec& g = s.grid;
  const SpaceGrid sg = g.space();
  const int d = g.dim;
  const int nt = g.n_time;
  if (nt < 5) throw InvalidArgument("at least five time samples are needed");
  const double dt = g.dt();

  std::vector<ScalarField> p_ref(nt, ScalarField(sg));
  for (int j = 0; j < nt; ++j)
    for (std::size_t q = 0; q < sg.points(); ++q) p_ref[j][q] = pressure(ref.rho[j][q], ref.theta[j][q]);

  std::vector<double> fm(nt), fs(nt), fp(nt), ff(nt), fd(nt);
  for (int j = 0; j < nt; ++j) {
    std::vector<VectorField> grad_u;
    for (int i = 0; i < d; ++i) grad_u.push_back(gradient(ref.u[j].component(i)));
    const ScalarField div_u = divergence(ref.u[j]);
    const VectorField grad_big = gradient(ref.theta[j]);
    const VectorField grad_p = gradient(p_ref[j]);
    const VectorField grad_th = gradient(s.theta[j]);
    double am = 0.0, as = 0.0, ap = 0.0, af = 0.0, ad = 0.0;
    for (std::size_t q = 0; q < sg.points(); ++q) {
      const double rho = s.rho[j][q], th = s.theta[j][q], r = ref.rho[j][q], big = ref.theta[j][q];
      const double ds = entropy(rho, th) - entropy(r, big);
      const double big_t = sample_derivative([&](int k) { return ref.theta[k][q]; }, j, nt, dt);
      const double p_t = sample_derivative([&](int k) { return p_ref[k][q]; }, j, nt, dt);
      double mom = 0.0, ug = 0.0, upg = 0.0, gg = 0.0, g2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double diff = ref.u[j].comp[i][q] - s.u[j].comp[i][q];
        const double ui_t = sample_derivative([&](int k) { return ref.u[k].comp[i][q]; }, j, nt, dt);
        double conv = 0.0;
        for (int l = 0; l < d; ++l) conv += s.u[j].comp[l][q] * grad_u[i].comp[l][q];
        mom += rho * diff * (ui_t + conv);
        ug += s.u[j].comp[i][q] * grad_big.comp[i][q];
        upg += s.u[j].comp[i][q] * grad_p.comp[i][q];
        gg += grad_th.comp[i][q] * grad_big.comp[i][q];
        g2 += grad_th.comp[i][q] * grad_th.comp[i][q];
      }
      am += mom - pressure(rho, th) * div_u[q];
      as -= rho * ds * (big_t + ug);
      ap += (1.0 - rho / r) * p_t - rho / r * upg;
      af += gg / th;
      ad += big * g2 / (th * th);
    }
    const double np = static_cast<double>(sg.points());
    fm[j] = am / np;
    fs[j] = as / np;
    fp[j] = ap / np;
    ff[j] = af / np;
    fd[j] = ad / np;
  }

  RelEntropyReport rep;
  for (int j = 0; j < nt; ++j) rep.times.push_back(g.time(j));
  rep.value = value;
  rep.momentum_term = cumulative(fm, g);
  rep.entropy_term = cumulative(fs, g);
  rep.pressure_term = cumulative(fp, g);
  rep.flux_term = cumulative(ff, g);
  rep.dissipation = cumulative(fd, g);
  for (int j = 0; j < nt; ++j) {
    const double right = rep.momentum_term[j] + rep.entropy_term[j] + rep.pressure_term[j] + rep.flux_term[j];
    const double left = value[j] - value[0] + rep.dissipation[j];
    rep.defect.push_back(right - left);
  }
  return rep;
}

WeakStrongReport weak_strong_monitor(const GasState& weak, const GasState& ref) {
  WeakStrongReport r;
  r.value = rel_entropy(weak, ref);
  for (int j = 0; j < weak.grid.n_time; ++j) r.times.push_back(weak.grid.time(j));
  r.initial = r.value.front();
  for (double v : r.value) r.max_value = std::max(r.max_value, v);
  if (r.initial > 0.0) r.growth = r.max_value / r.initial;
  return r;
}

}  // namespace wildgas
