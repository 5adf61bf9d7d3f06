#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "wildgas/ansatz.hpp"
#include "wildgas/dissipdata.hpp"
#include "wildgas/errors.hpp"
#include "wildgas/heat.hpp"
#include "wildgas/presets.hpp"
#include "wildgas/subsolution.hpp"

namespace wildgas {
namespace {

using testing::kTwoPi;

// int |w|^2 / (2 rho0) by direct summation.
double kinetic_oracle(const VectorField& w, const ScalarField& rho0) {
  double s = 0.0;
  for (std::size_t p = 0; p < rho0.size(); ++p) {
    double q = 0.0;
    for (int i = 0; i < w.dim(); ++i) q += w.comp[i][p] * w.comp[i][p];
    s += q / (2.0 * rho0[p]);
  }
  return s / static_cast<double>(rho0.size());
}

VectorField shear_momentum(const InitialData& data) {
  VectorField v0(data.u0.grid);
  for (int i = 0; i < v0.dim(); ++i)
    for (std::size_t p = 0; p < v0.points(); ++p) v0.comp[i][p] = data.rho0[p] * data.u0.comp[i][p];
  return v0;
}

const DissipativeResult& pipeline() {
  static const DissipativeResult r = build_dissipative_data(DissipativeConfig{});
  return r;
}

const InitialData& shear_data() {
  static const InitialData d = make_preset("shear", SpaceGrid{2, 32});
  return d;
}

BudgetField budget_of(const ChiProfile& prof, const InitialData& data) {
  return [prof, rho0 = data.rho0, theta0 = data.theta0](double t) {
    ScalarField f(rho0.grid);
    for (std::size_t p = 0; p < f.size(); ++p) f[p] = prof(t) - 1.5 * rho0[p] * theta0[p];
    return f;
  };
}

TEST(ChooseChi0, StillUnitGas) {
  const SpaceGrid g{2, 16};
  EXPECT_NEAR(choose_chi0(VectorField(g), ScalarField(g, 1.0), ScalarField(g, 1.0)), 1.65, 1e-14);
}

TEST(ChooseChi0, ConstantFlowScalesQuadratically) {
  testing::for_all(20, 11, [](std::mt19937_64& rng, int) {
    const int d = 2 + static_cast<int>(rng() % 2);
    const SpaceGrid g{d, 8};
    const double rho = testing::uniform(rng, 0.5, 3.0), theta = testing::uniform(rng, 0.5, 3.0);
    VectorField v(g);
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
      const double c = testing::normal(rng);
      std::fill(v.comp[i].begin(), v.comp[i].end(), c);
      q += c * c;
    }
    const double thermal = 1.5 * rho * theta;
    const double one = choose_chi0(v, ScalarField(g, rho), ScalarField(g, theta), 0.0);
    const double two = choose_chi0(2.0 * v, ScalarField(g, rho), ScalarField(g, theta), 0.0);
    EXPECT_NEAR(one, 0.5 * d * q / rho + thermal, 1e-12 * one);
    EXPECT_NEAR(two - thermal, 4.0 * (one - thermal), 1e-12 * two);
  });
}

TEST(ChooseChi0, RejectsCompressibleMomentum) {
  const SpaceGrid g{2, 16};
  VectorField v(g);
  for (std::size_t p = 0; p < v.points(); ++p) v.comp[0][p] = std::sin(kTwoPi * g.coord(p, 0));
  EXPECT_THROW(choose_chi0(v, ScalarField(g, 1.0), ScalarField(g, 1.0)), NotSolenoidal);
}

TEST(ChooseChi0, StrictlyAbovePointwiseEnergy) {
  const InitialData& data = shear_data();
  const VectorField v0 = shear_momentum(data);
  const double chi0 = choose_chi0(v0, data.rho0, data.theta0);
  for (std::size_t p = 0; p < v0.points(); ++p) {
    double q = 0.0;
    for (int i = 0; i < 2; ++i) q += v0.comp[i][p] * v0.comp[i][p];
    ASSERT_LT(q / data.rho0[p] + 1.5 * data.rho0[p] * data.theta0[p], chi0);
  }
}

TEST(BuildChi, ShapeInvariants) {
  const ChiProfile c = build_chi(1.0, 3.0, 10.0, 1.0);
  EXPECT_NEAR(c.peak, 0.9, 1e-14);
  EXPECT_NEAR(c(0.0), 1.0, 1e-14);
  EXPECT_NEAR(c(1.0), 1.0, 1e-12);
  EXPECT_NEAR(c(c.peak), 3.0, 1e-12);
  const int n = 10000;
  for (int i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) / n;
    ASSERT_GT(c(t), 1.0);
    ASSERT_LE(c(t), 3.0);
    if (t > c.peak) EXPECT_NEAR(c.slope(t), -20.0, 1e-12);
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double tau = testing::uniform(rng, c.peak, 1.0);
    const double t = testing::uniform(rng, tau, 1.0);
    if (t <= tau) continue;
    ASSERT_LT(c(t), c(tau) - 10.0 * (t - tau)) << tau << ' ' << t;
  }
}

TEST(BuildChi, RejectsInfeasibleAndInvalid) {
  EXPECT_THROW(build_chi(1.0, 3.0, 0.5, 1.0), InfeasibleProfile);
  EXPECT_THROW(build_chi(1.0, 2.0, 10.0, 1.0), InvalidArgument);
  EXPECT_THROW(build_chi(1.0, 3.0, -1.0, 1.0), InvalidArgument);
  EXPECT_THROW(build_chi(1.0, 3.0, 10.0, 0.0), InvalidArgument);
}

TEST(Budget, SlopeKneeAndInitialValue) {
  const SpaceGrid g{2, 8};
  std::mt19937_64 rng(3);
  ScalarField rho(g), theta(g);
  for (std::size_t p = 0; p < rho.size(); ++p) {
    rho[p] = testing::uniform(rng, 0.5, 2.0);
    theta[p] = testing::uniform(rng, 0.5, 2.0);
  }
  const double chi_tau = 5.0, chi0 = 3.0, k = 40.0;
  const double knee = dissipative_knee(chi_tau, chi0, k);
  EXPECT_DOUBLE_EQ(knee, 0.05);
  const ScalarField e0 = dissipative_budget(0.0, chi_tau, chi0, k, rho, theta);
  const ScalarField e1 = dissipative_budget(0.01, chi_tau, chi0, k, rho, theta);
  const ScalarField e2 = dissipative_budget(0.03, chi_tau, chi0, k, rho, theta);
  const ScalarField below = dissipative_budget(knee * (1.0 - 1e-15), chi_tau, chi0, k, rho, theta);
  const ScalarField late = dissipative_budget(0.2, chi_tau, chi0, k, rho, theta);
  for (std::size_t p = 0; p < rho.size(); ++p) {
    EXPECT_NEAR(e0[p], chi_tau - 1.5 * rho[p] * theta[p], 1e-14);
    EXPECT_NEAR((e2[p] - e1[p]) / 0.02, -k, 1e-12 * k);
    EXPECT_NEAR(below[p], late[p], 1e-12);
    EXPECT_NEAR(late[p], chi0 - 1.5 * rho[p] * theta[p], 1e-14);
  }
}

TEST(Admissibility, StillGasPassesForAnySlope) {
  const SpaceGrid sg{2, 16};
  const InitialData data = make_preset("equilibrium", sg);
  const GridSpec grid{2, 16, 17, 0.05};
  const Ansatz a = build_ansatz(grid, data.rho0, data.u0);
  const SubsolutionState w{VectorField(sg)};
  const TemperatureSolve th = solve_theta(w, a, data.theta0);
  for (double k : {1e-6, 1.0, 1e3}) {
    const AdmissibilityReport r = admissibility_check(w, th, data.rho0, data.theta0, 2.0, 1.6, k);
    EXPECT_TRUE(r.passed) << k;
    EXPECT_GT(r.margin, 0.0);
    EXPECT_NO_THROW(require_admissible(r));
  }
}

TEST(Admissibility, TemperatureRateStableUnderTimeRefinement) {
  const SpaceGrid sg{2, 16};
  const InitialData data = make_preset("shear", sg);
  const SubsolutionState w{shear_momentum(data)};
  std::vector<double> c;
  for (int nt : {33, 65}) {
    const GridSpec grid{2, 16, nt, 0.02};
    const Ansatz a = build_ansatz(grid, data.rho0, data.u0);
    const TemperatureSolve th = solve_theta(w, a, data.theta0);
    c.push_back(admissibility_check(w, th, data.rho0, data.theta0, 10.0, 5.0, 1.0).c_hat);
  }
  EXPECT_GT(c[0], 0.0);
  EXPECT_NEAR(c[1], c[0], 0.05 * c[0]);
}

TEST(Admissibility, TooGentleSlopeFails) {
  const SpaceGrid sg{2, 16};
  const InitialData data = make_preset("shear", sg);
  const SubsolutionState w{shear_momentum(data)};
  const GridSpec grid{2, 16, 17, 0.02};
  const Ansatz a = build_ansatz(grid, data.rho0, data.u0);
  const TemperatureSolve th = solve_theta(w, a, data.theta0);
  const AdmissibilityReport ok = admissibility_check(w, th, data.rho0, data.theta0, 10.0, 5.0, 1.0);
  ASSERT_GT(ok.k_min, 0.0);
  const AdmissibilityReport bad =
      admissibility_check(w, th, data.rho0, data.theta0, 10.0, 5.0, 0.01 * ok.k_min);
  EXPECT_FALSE(bad.passed);
  EXPECT_LT(bad.margin, 0.0);
  EXPECT_THROW(require_admissible(bad), AdmissibilityFailed);
  const AdmissibilityReport good =
      admissibility_check(w, th, data.rho0, data.theta0, 10.0, 5.0, 2.0 * ok.k_min);
  EXPECT_TRUE(good.passed);
}

TEST(EnergyIdentity, EqualsConstraintGap) {
  const SpaceGrid sg{2, 16};
  const InitialData data = make_preset("shear", sg);
  const VectorField v0 = shear_momentum(data);
  const GridSpec grid{2, 16, 9, 0.02};
  const Ansatz a = build_ansatz(grid, data.rho0, data.u0);
  const TemperatureSolve th = solve_theta(SubsolutionState(v0), a, data.theta0);
  std::vector<double> times;
  std::vector<VectorField> w;
  double expected = 0.0;
  const double chi = 50.0;
  for (int j = 0; j < grid.n_time; ++j) {
    times.push_back(grid.time(j));
    w.push_back(v0);
    double gap = 0.0;
    for (std::size_t p = 0; p < sg.points(); ++p) gap += chi - 1.5 * data.rho0[p] * th.theta[j][p];
    gap = gap / sg.points() - kinetic_oracle(v0, data.rho0);
    expected = std::max(expected, std::abs(gap));
  }
  EXPECT_NEAR(energy_identity(times, w, data.rho0, th.theta, [&](double) { return chi; }), expected,
              1e-12 * chi);
  const auto sat = saturated_velocity(times, data.rho0, th.theta, [&](double) { return chi; }, {0.6, 0.8, 0.0});
  EXPECT_LE(energy_identity(times, sat, data.rho0, th.theta, [&](double) { return chi; }), 1e-8);
  EXPECT_THROW(saturated_velocity(times, data.rho0, th.theta, [](double) { return 0.0; }, {1.0, 0.0, 0.0}),
               PreconditionFailed);
}

TEST(Recursion, RejectsBadInput) {
  const InitialData& data = shear_data();
  const VectorField v0 = shear_momentum(data);
  const ChiProfile prof = build_chi(100.0, 300.0, 1e4, 0.2);
  const BudgetField e = budget_of(prof, data);
  RecursionOptions o;
  o.tau = 0.19;
  o.eps0 = 0.005;
  EXPECT_THROW(lemma_a2_recursion(v0, data.rho0, e, 0.2, -1, o), InvalidArgument);
  o.eps0 = 0.02;
  EXPECT_THROW(lemma_a2_recursion(v0, data.rho0, e, 0.2, 1, o), InvalidArgument);
  o.eps0 = 0.005;
  VectorField bad = v0;
  for (std::size_t p = 0; p < bad.points(); ++p) bad.comp[0][p] += std::sin(kTwoPi * bad.grid.coord(p, 0));
  EXPECT_THROW(lemma_a2_recursion(bad, data.rho0, e, 0.2, 1, o), NotSolenoidal);
  const BudgetField tight = [&](double) { return ScalarField(data.rho0.grid, 0.0); };
  EXPECT_THROW(lemma_a2_recursion(v0, data.rho0, tight, 0.2, 1, o), PreconditionFailed);
}

TEST(Recursion, DepthZeroKeepsInitialMomentum) {
  const InitialData& data = shear_data();
  const VectorField v0 = shear_momentum(data);
  const DissipativeResult& full = pipeline();
  const BudgetField e = budget_of(full.profile, data);
  RecursionOptions o;
  o.tau = full.recursion.ledger[0].tau;
  o.eps0 = full.recursion.ledger[0].eps;
  const RecursionResult r = lemma_a2_recursion(v0, data.rho0, e, full.profile.t_final, 0, o);
  ASSERT_EQ(r.levels.size(), 1u);
  EXPECT_EQ(testing::max_diff(r.final_state().v(o.tau), v0), 0.0);
  EXPECT_DOUBLE_EQ(r.tau_bar, o.tau);
  const double expected = integrate(e(o.tau)) - kinetic_oracle(v0, data.rho0);
  EXPECT_GT(expected, 0.0);
  EXPECT_NEAR(r.ledger[0].defect, expected, 1e-12 * expected);
}

TEST(Recursion, WindowIntegralMatchesFineQuadrature) {
  const InitialData& data = shear_data();
  const DissipativeResult& full = pipeline();
  const BudgetField e = budget_of(full.profile, data);
  const auto& led = full.recursion.ledger;
  for (std::size_t k = 1; k < led.size(); ++k) {
    const double t1 = led[k - 1].tau - led[k].eps, t2 = led[k - 1].tau + led[k].eps;
    const int n = 4000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = t1 + (i + 0.5) * (t2 - t1) / n;
      s += integrate(e(t)) - kinetic_oracle(full.recursion.levels[k - 1].v(t), data.rho0);
    }
    s *= (t2 - t1) / n;
    EXPECT_NEAR(led[k].alpha, s, 1e-6 * std::abs(s)) << k;
  }
}

TEST(Recursion, StaircaseInvariants) {
  const InitialData& data = shear_data();
  const DissipativeResult& full = pipeline();
  const auto& led = full.recursion.ledger;
  const auto& lv = full.recursion.levels;
  ASSERT_EQ(static_cast<int>(led.size()), DissipativeConfig{}.depth + 1);
  const WeakTopologyMetric metric(data.rho0.grid);
  for (std::size_t k = 1; k < led.size(); ++k) {
    const double bound = std::ldexp(1.0, -static_cast<int>(k));
    const double t1 = led[k - 1].tau - led[k].eps, t2 = led[k - 1].tau + led[k].eps;
    EXPECT_LT(led[k].eps, led[k - 1].eps / 2.0);
    EXPECT_GT(led[k].tau, t1);
    EXPECT_LT(led[k].tau, t2);
    EXPECT_LT(led[k].defect, led[k - 1].defect);
    EXPECT_GE(led[k].kinetic - led[k - 1].kinetic,
              led[k].lambda_hat * led[k].alpha * led[k].alpha / (led[k].eps * led[k].eps));
    EXPECT_LT(led[k].metric_step, bound);
    EXPECT_LT(led[k].pairing, bound);
    EXPECT_LT(led[k].tau, full.profile.t_final);

    // Independent distance and pairing on a finer time grid across the window.
    double dist = 0.0, pair = 0.0;
    for (int i = 0; i <= 256; ++i) {
      const double t = t1 + (t2 - t1) * i / 256.0;
      const VectorField diff = lv[k].v(t) - lv[k - 1].v(t);
      dist = std::max(dist, metric.distance(diff, VectorField(diff.grid)));
      for (std::size_t m = 0; m < k; ++m) {
        const VectorField wm = lv[m].v(t);
        double s = 0.0;
        for (std::size_t p = 0; p < wm.points(); ++p)
          for (int c = 0; c < wm.dim(); ++c) s += diff.comp[c][p] * wm.comp[c][p] / data.rho0[p];
        pair = std::max(pair, std::abs(s) / wm.points());
      }
    }
    EXPECT_LT(dist, bound) << k;
    EXPECT_LT(pair, bound) << k;

    // The correction vanishes bit-exactly outside the window.
    for (double t : {0.0, t1 - 1e-9, t2 + 1e-9, full.profile.t_final})
      EXPECT_EQ(testing::max_diff(lv[k].v(t), lv[k - 1].v(t)), 0.0) << k << ' ' << t;

    // tau_k is the argmax of the kinetic energy over the window samples.
    const int half = RecursionOptions{}.samples_per_window / 2;
    for (int i = 1; i < 2 * half; ++i) {
      const double t = i == half ? led[k - 1].tau : led[k - 1].tau + led[k].eps * (static_cast<double>(i) / half - 1.0);
      EXPECT_LE(kinetic_oracle(lv[k].v(t), data.rho0), led[k].kinetic * (1.0 + 1e-12)) << k << ' ' << i;
    }
  }
  EXPECT_LT(std::abs(full.tau_bar - led[0].tau), led[0].eps);
  EXPECT_EQ(testing::max_diff(lv.back().v(full.profile.t_final), lv[0].v(0.0)), 0.0);
}

TEST(Pipeline, AdmissibleAndForcedFailure) {
  const DissipativeResult& r = pipeline();
  EXPECT_TRUE(r.admissibility.passed);
  EXPECT_FALSE(r.forced.passed);
  EXPECT_GT(r.chi_tau, r.chi0);
  EXPECT_GT(r.chi_bar, 2.0 * r.chi0);
  EXPECT_LE(r.saturated_defect, 1e-8);
  EXPECT_GE(r.tau_bar, r.profile.peak);
  EXPECT_NEAR(dissipative_knee(r.chi_tau, r.chi0, r.profile.k), (r.chi_tau - r.chi0) / r.profile.k, 1e-15);
}

}  // namespace
}  // namespace wildgas
