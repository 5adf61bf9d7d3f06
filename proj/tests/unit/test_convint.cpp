#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "wildgas/convint.hpp"
#include "wildgas/errors.hpp"
#include "wildgas/presets.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {
namespace {

using testing::kTwoPi;
using testing::tabulate;
using testing::uniform;

double half_d_lambda(int d, const std::array<double, 3>& w, double rho, const SymMatrix& u) {
  const std::vector<double> wv(w.begin(), w.begin() + d);
  return 0.5 * d * lambda_max((1.0 / rho) * SymMatrix::outer(wv) - u);
}

TEST(EpsilonForDelta, ShrinksWithDelta) {
  double prev = epsilon_for_delta(1.0, 5.0, 0.5, 2.0, 0.3, 2);
  for (double delta : {0.5, 0.1, 1e-2, 1e-4, 1e-8}) {
    const double eps = epsilon_for_delta(delta, 5.0, 0.5, 2.0, 0.3, 2);
    EXPECT_LT(eps, prev);
    EXPECT_GT(eps, 0.0);
    prev = eps;
  }
  EXPECT_LT(prev, 1e-7);
}

TEST(EpsilonForDelta, FrozenCoefficientsAcceptEverything) {
  EXPECT_TRUE(std::isinf(epsilon_for_delta(1e-9, 3.0, 1.2, 1.2, 0.0, 3)));
}

TEST(EpsilonForDelta, MonteCarloAudit) {
  // States with (d/2) lambda_max(w(x)w/rho - U) <= e_sup; moving rho and the
  // frozen velocity by less than eps moves both maps by less than delta/4.
  long failures = 0;
  testing::for_all(10000, 101, [&](std::mt19937_64& rng, int i) {
    const int d = 2 + i % 2;
    const double rho_lo = uniform(rng, 0.2, 2.0), rho_hi = rho_lo * uniform(rng, 1.0, 3.0);
    const double e_sup = uniform(rng, 0.1, 20.0), delta = uniform(rng, 1e-3, 1.0);
    const double eps = epsilon_for_delta(delta, e_sup, rho_lo, rho_hi, 1.0, d);
    const double rho = uniform(rng, rho_lo, rho_hi);
    // |w|^2 / (2 rho) <= e_sup on the admissible set.
    std::array<double, 3> w{0, 0, 0};
    const double r = std::sqrt(2 * rho * e_sup) * std::cbrt(uniform(rng, 0, 1));
    double n2 = 0.0;
    for (int a = 0; a < d; ++a) {
      w[a] = testing::normal(rng);
      n2 += w[a] * w[a];
    }
    for (int a = 0; a < d; ++a) w[a] *= r / std::sqrt(n2);
    SymMatrix u{d, {}};
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) u(a, b) = testing::normal(rng);
    const double tr = u.trace() / d;
    for (int a = 0; a < d; ++a) u(a, a) -= tr;
    std::array<double, 3> w2 = w;
    for (int a = 0; a < d; ++a) w2[a] += eps / std::sqrt(d) * uniform(rng, -1, 1);
    const double rho2 = rho + eps * uniform(rng, -1, 1);
    double k1 = 0.0, k2 = 0.0;
    for (int a = 0; a < d; ++a) {
      k1 += w[a] * w[a];
      k2 += w2[a] * w2[a];
    }
    const double dk = std::abs(k1 / (2 * rho) - k2 / (2 * rho2));
    const double dl = std::abs(half_d_lambda(d, w, rho, u) - half_d_lambda(d, w2, rho2, u));
    if (!(dk < delta / 4 && dl < delta / 4)) ++failures;
  });
  EXPECT_EQ(failures, 0);
}

Ansatz still_ansatz(const GridSpec& g, const ScalarField& rho0) { return build_ansatz(g, rho0, VectorField(g.space())); }

TEST(Localize, ConstantCoefficientsGiveOneBox) {
  const GridSpec g{2, 16, 9, 1.0};
  const BoxDecomposition bd = localize(still_ansatz(g, ScalarField(g.space(), 1.0)), 0.1, 0.9, 1e-3);
  EXPECT_EQ(bd.m, 1);
  EXPECT_EQ(bd.boxes.size(), 1u);
}

// Minimal uniform refinement with every cell range of f below eps, by scanning m.
int brute_force_refinement(const ScalarField& f, double eps) {
  const SpaceGrid& g = f.grid;
  for (int m = 1; m <= g.n; ++m) {
    double worst = 0.0;
    for (int c0 = 0; c0 < m; ++c0)
      for (int c1 = 0; c1 < m; ++c1) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t p = 0; p < f.size(); ++p) {
          const int a = std::min(static_cast<int>(std::floor(g.coord(p, 0) * m)), m - 1);
          const int b = std::min(static_cast<int>(std::floor(g.coord(p, 1) * m)), m - 1);
          if (a != c0 || b != c1) continue;
          lo = std::min(lo, f[p]);
          hi = std::max(hi, f[p]);
        }
        if (hi >= lo) worst = std::max(worst, hi - lo);
      }
    if (worst < eps) return m;
  }
  return -1;
}

TEST(Localize, MatchesBruteForceRefinement) {
  const GridSpec g{2, 32, 129, 1.0};
  const ScalarField rho0 = tabulate(g.space(), [](const double* x) { return 2 + 0.5 * std::sin(kTwoPi * x[0]); });
  const Ansatz a = still_ansatz(g, rho0);
  ConvintOptions opts;
  opts.min_box_points = 1;
  opts.max_boxes = 1 << 15;
  int prev_m = 0;
  double prev_bound = 0.0;
  for (double eps : {0.6, 0.3, 0.15}) {
    const BoxDecomposition bd = localize(a, 0.0, 1.0, eps, opts);
    EXPECT_EQ(bd.m, brute_force_refinement(rho0, eps)) << "eps " << eps;
    EXPECT_EQ(bd.boxes.size(), static_cast<std::size_t>(bd.m * bd.m * bd.m));
    EXPECT_LE(static_cast<double>(bd.boxes.size()), bd.box_bound(2));
    // Halving eps at most multiplies the box count by 2^{d+1}: always for the
    // Lipschitz bound, and for the minimal m once cells are narrower than the
    // profile scale (at eps = 0.6 two half-period cells fit by luck).
    if (prev_bound > 0.0) EXPECT_LE(bd.box_bound(2), 8.0 * prev_bound);
    if (prev_m >= 4) EXPECT_LE(bd.m, 2 * prev_m);
    prev_m = bd.m;
    prev_bound = bd.box_bound(2);
  }
}

TEST(Localize, BoxesPartitionSpaceTime) {
  const GridSpec g{2, 16, 17, 0.2};
  const InitialData d = make_preset("generic", g.space());
  const Ansatz a = build_ansatz(g, d.rho0, d.u0);
  const BoxDecomposition bd = localize(a, 0.02, 0.2, 2.0);
  std::set<std::pair<double, double>> slabs;
  for (const Box& b : bd.boxes) slabs.insert({b.t1, b.t2});
  double t = 0.02;
  for (const auto& [s1, s2] : slabs) {
    EXPECT_DOUBLE_EQ(s1, t);
    t = s2;
  }
  EXPECT_DOUBLE_EQ(t, 0.2);
  for (const auto& [s1, s2] : slabs) {
    std::vector<int> owners(g.space().points(), 0);
    for (const Box& b : bd.boxes)
      if (b.t1 == s1)
        for (std::size_t p = 0; p < owners.size(); ++p) owners[p] += b.contains(g.space(), p);
    for (int o : owners) EXPECT_EQ(o, 1);
  }
  EXPECT_EQ(bd.frozen.size(), bd.boxes.size());
}

TEST(Localize, RejectsUnreachableOscillation) {
  const GridSpec g{2, 16, 9, 1.0};
  const ScalarField rho0 = tabulate(g.space(), [](const double* x) { return 2 + std::sin(kTwoPi * 4 * x[0]); });
  EXPECT_THROW(localize(still_ansatz(g, rho0), 0.0, 1.0, 1e-6), EpsilonTooSmall);
}

SampledFrame quiet_frame(const GridSpec& g, double e) {
  SampledFrame f;
  f.space = g.space();
  for (int j = 0; j < g.n_time; ++j) {
    f.times.push_back(g.time(j));
    f.w.emplace_back(g.space());
    f.u.emplace_back(g.space());
    f.rho.emplace_back(g.space(), 1.0);
    f.e.emplace_back(g.space(), e);
  }
  return f;
}

TEST(PerturbBox, ZeroMarginIsRejected) {
  const GridSpec g{2, 16, 17, 1.0};
  EXPECT_THROW(perturb_box(quiet_frame(g, 0.0), Box{0.0, 1.0, 1, {0, 0, 0}, 0.0}, FrozenCoefficients{}),
               NoAdmissibleAmplitude);
}

TEST(PerturbBox, UnitBoxMatchesAmplitudeLineSearch) {
  const GridSpec g{2, 32, 33, 1.0};
  const SampledFrame frame = quiet_frame(g, 1.0);
  const Box box{0.0, 1.0, 1, {0, 0, 0}, 0.0};
  ConvintOptions opts;
  opts.frequency = 4;
  const WavePerturbation wp = perturb_box(frame, box, FrozenCoefficients{}, opts);
  EXPECT_GT(wp.energy, 0.0);
  EXPECT_GT(wp.gain, 0.0);

  // Oracle: largest amplitude keeping the constraint strict on every sample.
  const WaveGroup unit = wave_fields(g.space(), box, wp.orientation, 0.0);
  auto ok = [&](double s) {
    for (int j = 0; j < g.n_time; ++j) {
      const double eta = unit.window.value(g.time(j)), deta = unit.window.d1(g.time(j));
      if (eta == 0.0 && deta == 0.0) continue;
      for (std::size_t p = 0; p < g.space().points(); ++p) {
        std::array<double, 3> w{s * eta * unit.w.comp[0][p], s * eta * unit.w.comp[1][p], 0};
        SymMatrix y = SymMatrix::at(unit.y, p);
        if (!(half_d_lambda(2, w, 1.0, (s * deta) * y) < 1.0)) return false;
      }
    }
    return true;
  };
  double lo = 0.0, hi = 1.0;
  while (ok(hi)) hi *= 2;
  for (int i = 0; i < 60; ++i) (ok(0.5 * (lo + hi)) ? lo : hi) = 0.5 * (lo + hi);
  EXPECT_NEAR(std::abs(wp.amplitude), opts.safety * lo, 1e-6 * lo);

  // Gain ratio against the squared budget, measured.
  const double budget2 = 1.0;  // int int e^2 over the unit box
  EXPECT_GT(wp.energy / budget2, 0.0);

  // The accepted group satisfies the linear system and keeps the constraint strict.
  SubsolutionState s(VectorField(g.space()));
  s.add(wp.group);
  const GridSpec fine{2, 32, 257, 1.0};
  EXPECT_LE(linear_system_residual(s, fine).momentum, 1e-8);
  EXPECT_LE(linear_system_residual(s, fine).divergence, 1e-10);
  EXPECT_LE(s.U(0.37).max_abs_trace(), 1e-12);
  for (int j = 0; j < g.n_time; ++j) {
    const VectorField w = s.v(g.time(j));
    const SymTensorField u = s.U(g.time(j));
    for (std::size_t p = 0; p < w.points(); ++p) {
      std::array<double, 3> wv{w.comp[0][p], w.comp[1][p], 0};
      EXPECT_LT(half_d_lambda(2, wv, 1.0, SymMatrix::at(u, p)), 1.0);
    }
  }
}

TEST(PerturbBox, CellWaveKeepsConstraintOnWholeTorus) {
  // Budget tight in the other cells: leakage of a cell wave must not break it.
  const GridSpec g{2, 32, 33, 1.0};
  SampledFrame frame = quiet_frame(g, 1.0);
  const Box box{0.25, 0.75, 4, {1, 2, 0}, 0.0};
  for (auto& e : frame.e)
    for (std::size_t p = 0; p < e.size(); ++p)
      if (!box.contains(g.space(), p)) e[p] = 1e-9;
  ConvintOptions opts;
  opts.frequency = 8;
  const WavePerturbation wp = perturb_box(frame, box, FrozenCoefficients{}, opts);
  SubsolutionState s(VectorField(g.space()));
  s.add(wp.group);
  for (int j = 0; j < g.n_time; ++j) {
    const VectorField w = s.v(g.time(j));
    const SymTensorField u = s.U(g.time(j));
    for (std::size_t p = 0; p < w.points(); ++p) {
      std::array<double, 3> wv{w.comp[0][p], w.comp[1][p], 0};
      ASSERT_LT(half_d_lambda(2, wv, 1.0, SymMatrix::at(u, p)), frame.e[j][p]) << j << ' ' << p;
    }
  }
}

TEST(PerturbBox, FrequencySweep) {
  const GridSpec g{2, 64, 33, 1.0};
  const SampledFrame frame = quiet_frame(g, 1.0);
  const Box box{0.0, 1.0, 1, {0, 0, 0}, 0.0};
  std::vector<double> gain, pairing;
  for (int f : {4, 8, 16}) {
    ConvintOptions opts;
    opts.frequency = f;
    const WavePerturbation wp = perturb_box(frame, box, FrozenCoefficients{}, opts);
    gain.push_back(wp.gain);
    pairing.push_back(wp.weak_pairing);
  }
  // Monotone in one direction up to 5% wobble; successive changes contract.
  bool up = true, down = true;
  for (std::size_t i = 1; i < gain.size(); ++i) {
    up = up && gain[i] >= 0.95 * gain[i - 1];
    down = down && gain[i] <= 1.05 * gain[i - 1];
    // Weak pairing falls at least like 1/N.
    EXPECT_LE(pairing[i], 0.5 * pairing[i - 1] * 1.05);
  }
  EXPECT_TRUE(up || down);
  EXPECT_LE(std::abs(gain[2] - gain[1]), 0.5 * std::abs(gain[1] - gain[0]));
}

struct WildSetup {
  GridSpec g{2, 16, 41, 0.1};
  InitialData init;
  Problem problem;
  Iterate first;

  WildSetup()
      : init(make_preset("generic", g.space())),
        problem{build_ansatz(g, init.rho0, init.u0), init.theta0, {}, {}},
        first([this] {
          const ComparisonBounds cb = comparison_bounds(problem.ansatz, problem.theta0);
          problem.chi = constant_profile(choose_chi(problem.ansatz, problem.ansatz.v0, cb.theta_hi));
          return evaluate(problem, SubsolutionState(problem.ansatz.v0));
        }()) {}
};

TEST(Pw1Step, RequiresEnergyDefect) {
  const WildSetup w;
  const double i0 = I_eps(w.first.state, 0.01, w.problem.ansatz, w.first.ebar);
  ASSERT_LT(i0, 0.0);
  EXPECT_THROW(pw1_step(w.problem, w.first, 0.01, 2 * std::abs(i0)), PreconditionFailed);
  EXPECT_THROW(pw1_step(w.problem, w.first, 0.01, 0.0), InvalidArgument);
}

TEST(Iterate, StepInvariants) {
  const WildSetup w;
  const double eps = 0.01;
  const IterateResult r = iterate(w.problem, w.first, Schedule{eps, 3, 1e-8});
  ASSERT_FALSE(r.stalled) << r.stall_reason;
  ASSERT_EQ(r.ledger.records.size(), 3u);
  const GridSpec& g = w.g;
  for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
    const Iterate& it = r.trajectory[k];
    const GainRecord& rec = r.ledger.records[k - 1];
    EXPECT_GT(r.i_eps[k], r.i_eps[k - 1]);
    EXPECT_GE(rec.gain, 0.0);
    EXPECT_GE(rec.gain, rec.jensen_floor);
    EXPECT_GT(rec.inf_gap, 0.0);
    EXPECT_GT(rec.beta_hat, 0.0);
    const LinearResidual lr = linear_system_residual(it.state, g);
    EXPECT_LE(lr.momentum, 1e-8);
    EXPECT_LE(lr.divergence, 1e-10);
    for (int j = 0; j < g.n_time; ++j) {
      const double t = g.time(j);
      EXPECT_LE(it.state.U(t).max_abs_trace(), 1e-12);
      if (t <= eps) EXPECT_EQ(testing::max_diff(it.state.v(t), w.first.state.v(t)), 0.0) << "t = " << t;
    }
    // The budget is recomputed from the new temperature, never reused.
    const TemperatureSolve th = solve_theta(it.state, w.problem.ansatz, w.problem.theta0, w.problem.heat);
    const std::vector<ScalarField> e = ebar(w.problem.chi, w.problem.ansatz, th);
    for (int j = 0; j < g.n_time; ++j) EXPECT_EQ(testing::max_diff(e[j], it.ebar[j]), 0.0);
    EXPECT_TRUE(gap(it.state, w.problem.ansatz, it.ebar, {eps}).member);
  }
}

TEST(Iterate, ExactStateTakesNoSteps) {
  // Still gas at unit temperature with chi = 3/2 has e-bar = 0 and I_eps = 0.
  const GridSpec g{2, 16, 9, 0.1};
  Problem p{build_ansatz(g, ScalarField(g.space(), 1.0), VectorField(g.space())), ScalarField(g.space(), 1.0),
            constant_profile(1.5), {}};
  const Iterate it = evaluate(p, SubsolutionState(VectorField(g.space())));
  const IterateResult r = iterate(p, it, Schedule{0.01, 5, 1e-8});
  EXPECT_TRUE(r.ledger.records.empty());
  EXPECT_EQ(r.trajectory.size(), 1u);
  EXPECT_LE(r.final_defect, 1e-8);
}

TEST(Iterate, RejectsEpsBeyondHorizon) {
  const WildSetup w;
  EXPECT_THROW(iterate(w.problem, w.first, Schedule{0.2, 1, 1e-8}), InvalidArgument);
}

TEST(Ledger, CsvHasHeaderAndRows) {
  GainLedger l;
  l.records.push_back(GainRecord{});
  l.records.push_back(GainRecord{});
  const std::string path = ::testing::TempDir() + "ledger.csv";
  l.write_csv(path);
  std::ifstream is(path);
  std::string line;
  ASSERT_TRUE(std::getline(is, line));
  EXPECT_EQ(line.rfind("step,eps", 0), 0u);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

}  // namespace
}  // namespace wildgas
