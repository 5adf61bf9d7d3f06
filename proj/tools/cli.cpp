#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wildgas/ansatz.hpp"
#include "wildgas/convint.hpp"
#include "wildgas/dissipdata.hpp"
#include "wildgas/errors.hpp"
#include "wildgas/heat.hpp"
#include "wildgas/presets.hpp"
#include "wildgas/relent.hpp"
#include "wildgas/snapshot.hpp"
#include "wildgas/spectral.hpp"
#include "wildgas/subsolution.hpp"

namespace wildgas::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"wild", "dissipative", "weakstrong", "verify"};
  return names;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"scenario", "dim",    "n_space", "n_time",  "t_final",
                                             "preset",   "rho0_file", "theta0_file", "u0_file", "eps",
                                             "steps",    "depth",  "tau",     "chi_bar", "K",
                                             "margin",   "t_short", "perturbation", "seed"};
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw ConfigError("bad value for " + key + ": '" + text + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("non-finite value for " + key);
  }
  return value;
}

void assign(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "scenario") c.scenario = v;
  else if (key == "dim") c.dim = parse_number<int>(key, v);
  else if (key == "n_space") c.n_space = parse_number<int>(key, v);
  else if (key == "n_time") c.n_time = parse_number<int>(key, v);
  else if (key == "t_final") c.t_final = parse_number<double>(key, v);
  else if (key == "preset") c.preset = v;
  else if (key == "rho0_file") c.rho0_file = v;
  else if (key == "theta0_file") c.theta0_file = v;
  else if (key == "u0_file") c.u0_file = v;
  else if (key == "eps") c.eps = parse_number<double>(key, v);
  else if (key == "steps") c.steps = parse_number<int>(key, v);
  else if (key == "depth") c.depth = parse_number<int>(key, v);
  else if (key == "tau") c.tau = parse_number<double>(key, v);
  else if (key == "chi_bar") c.chi_bar = parse_number<double>(key, v);
  else if (key == "K") c.k = parse_number<double>(key, v);
  else if (key == "margin") c.margin = parse_number<double>(key, v);
  else if (key == "t_short") c.t_short = parse_number<double>(key, v);
  else if (key == "perturbation") c.perturbation = parse_number<double>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else throw ConfigError("unknown key '" + key + "'");
}

// Scenario defaults.
GridSpec grid_of(const ExperimentConfig& c) {
  GridSpec g;
  g.dim = c.dim.value_or(2);
  g.n_space = c.n_space.value_or(32);
  if (c.scenario == "wild") {
    g.t_final = c.t_final.value_or(0.1);
    g.n_time = c.n_time.value_or(81);
  } else if (c.scenario == "dissipative") {
    g.t_final = c.t_final.value_or(0.2);
    g.n_time = c.n_time.value_or(65);
  } else {
    g.t_final = c.t_final.value_or(0.05);
    g.n_time = c.n_time.value_or(21);
  }
  return g;
}

std::string preset_of(const ExperimentConfig& c) {
  if (c.preset) return *c.preset;
  return c.scenario == "dissipative" ? "shear" : "generic";
}

bool has_data_files(const ExperimentConfig& c) { return c.rho0_file || c.theta0_file || c.u0_file; }

FieldSnapshot read_field(const std::string& path, const SpaceGrid& sg, int components) {
  FieldSnapshot snap;
  try {
    snap = read_snapshot(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (snap.grid.dim != sg.dim || snap.grid.n_space != sg.n || snap.components != components)
    throw ConfigError(path + ": snapshot does not match the configured grid");
  return snap;
}

InitialData initial_data(const ExperimentConfig& c, const SpaceGrid& sg) {
  if (!has_data_files(c)) return make_preset(preset_of(c), sg);
  InitialData d;
  d.rho0 = read_field(*c.rho0_file, sg, 1).scalar();
  d.theta0 = read_field(*c.theta0_file, sg, 1).scalar();
  d.u0 = read_field(*c.u0_file, sg, sg.dim).vector();
  if (!(min_value(d.rho0) > 0.0 && min_value(d.theta0) > 0.0))
    throw ConfigError("initial density and temperature must be positive");
  return d;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void write_series_csv(const fs::path& path, const std::string& header,
                      const std::vector<std::vector<double>>& columns) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os.precision(17);
  os << header << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c][r];
    os << '\n';
  }
}

bool strictly_increasing(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) return false;
  return true;
}

bool bit_equal(const VectorField& a, const VectorField& b) {
  for (int c = 0; c < a.dim(); ++c)
    if (a.comp[c] != b.comp[c]) return false;
  return true;
}

// Wild output as a gas trajectory: rho~, u = (v + grad Psi) / rho~, theta.
GasState gas_of(const Problem& pb, const Iterate& it) {
  const Ansatz& an = pb.ansatz;
  const GridSpec& g = an.grid;
  GasState s{g, {}, {}, {}};
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.time(j);
    VectorField w = it.state.v(t) + an.grad_psi_at(t);
    const ScalarField& rho = an.rho_tilde[j];
    for (int c = 0; c < w.dim(); ++c)
      for (std::size_t p = 0; p < w.points(); ++p) w.comp[c][p] /= rho[p];
    s.rho.push_back(rho);
    s.theta.push_back(it.theta.theta[j]);
    s.u.push_back(std::move(w));
  }
  return s;
}

std::vector<VectorField> total_velocity(const Ansatz& an, const SubsolutionState& s) {
  std::vector<VectorField> out;
  for (int j = 0; j < an.grid.n_time; ++j) {
    const double t = an.grid.time(j);
    out.push_back(s.v(t) + an.grad_psi_at(t));
  }
  return out;
}

int run_wild(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  const GridSpec g = grid_of(c);
  const double eps = c.eps.value_or(g.t_final / 10.0);
  const int steps = c.steps.value_or(10);
  const InitialData init = initial_data(c, g.space());
  Problem pb{build_ansatz(g, init.rho0, init.u0), init.theta0, {}, {}};
  const ComparisonBounds cb = comparison_bounds(pb.ansatz, pb.theta0);
  const double chi = choose_chi(pb.ansatz, pb.ansatz.v0, cb.theta_hi, c.margin.value_or(0.1));
  pb.chi = constant_profile(chi);
  log << "wild: chi=" << chi << " theta in [" << cb.theta_lo << ", " << cb.theta_hi << "]\n";

  const Iterate first = evaluate(pb, SubsolutionState(pb.ansatz.v0));
  ConvintOptions opts;
  opts.seed = c.seed;
  const IterateResult r = iterate(pb, first, Schedule{eps, steps, 1e-8}, opts);
  const Iterate& last = r.trajectory.back();

  r.ledger.write_csv((out / "ledger.csv").string());
  const GapReport gr = gap(last.state, pb.ansatz, last.ebar, {eps});
  write_gap_csv((out / "gap.csv").string(), gr, energy_defect_density(last.state, pb.ansatz, last.ebar), g.dt());
  std::vector<double> trace_res(g.n_time, 0.0);
  write_heat_trace((out / "heat_trace.csv").string(), last.theta, trace_res);
  write_snapshot((out / "velocity.wgs").string(), FieldSnapshot::of(g, total_velocity(pb.ansatz, last.state)));
  write_snapshot((out / "theta.wgs").string(), FieldSnapshot::of(g, last.theta.theta));
  write_snapshot((out / "rho.wgs").string(), FieldSnapshot::of(g, pb.ansatz.rho_tilde));

  // Invariants of every step.
  std::vector<std::string> violations;
  if (!strictly_increasing(r.i_eps)) violations.push_back("I_eps not strictly increasing");
  for (const GainRecord& rec : r.ledger.records) {
    if (rec.gain < rec.jensen_floor) violations.push_back("gain below Jensen floor at step " + std::to_string(rec.step));
    if (!(rec.inf_gap > 0.0)) violations.push_back("membership lost at step " + std::to_string(rec.step));
  }
  for (int j = 0; j < g.n_time && g.time(j) <= eps; ++j)
    if (!bit_equal(last.state.v(g.time(j)), first.state.v(g.time(j))))
      violations.push_back("v changed on [0, eps] at sample " + std::to_string(j));
  if (!gr.member) violations.push_back("final state not a member");

  const EnergyAudit audit = total_energy(gas_of(pb, last));
  ordered_json j;
  j["scenario"] = "wild";
  j["grid"] = {{"dim", g.dim}, {"n_space", g.n_space}, {"n_time", g.n_time}, {"t_final", g.t_final}};
  j["preset"] = preset_of(c);
  j["seed"] = c.seed;
  j["eps"] = eps;
  j["chi"] = chi;
  j["theta_bounds"] = {cb.theta_lo, cb.theta_hi};
  j["i_eps"] = r.i_eps;
  j["steps_accepted"] = r.ledger.records.size();
  j["final_defect"] = r.final_defect;
  j["gap_min"] = r.gap_min;
  j["gap_mean"] = r.gap_mean;
  j["total_energy"] = audit.energy;
  j["total_energy_defect"] = audit.defect;
  j["linear_residual"] = linear_system_residual(last.state, g).momentum;
  j["stalled"] = r.stalled;
  j["stall_reason"] = r.stall_reason;
  j["violations"] = violations;
  write_json(out / "report.json", j);

  log << "wild: " << r.ledger.records.size() << " steps, I_eps " << r.i_eps.front() << " -> " << r.i_eps.back()
      << ", energy defect " << audit.defect << '\n';
  for (const auto& v : violations) log << "violation: " << v << '\n';
  if (!violations.empty()) return kInvariantViolation;
  if (r.stalled) {
    log << "stall: " << r.stall_reason << '\n';
    return kStall;
  }
  return kSuccess;
}

ordered_json admissibility_json(const AdmissibilityReport& a) {
  return {{"passed", a.passed}, {"margin", a.margin}, {"t_worst", a.t_worst}, {"c_hat", a.c_hat},
          {"k_min", a.k_min},   {"k", a.k},           {"gap_min", a.gap_min}};
}

int run_dissipative(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  const GridSpec g = grid_of(c);
  DissipativeConfig dc;
  dc.dim = g.dim;
  dc.n_space = g.n_space;
  dc.n_time = g.n_time;
  dc.t_final = g.t_final;
  dc.preset = preset_of(c);
  dc.data = initial_data(c, g.space());
  dc.tau = c.tau.value_or(0.0);
  dc.depth = c.depth.value_or(6);
  dc.margin = c.margin.value_or(0.1);
  dc.chi_bar = c.chi_bar.value_or(0.0);
  dc.k = c.k.value_or(0.0);
  dc.recursion.seed = c.seed;

  const DissipativeResult r = build_dissipative_data(dc);
  write_staircase_csv((out / "staircase.csv").string(), r.recursion.ledger);

  const ScalarField rho0 = r.ansatz.rho0;
  const GridSpec& sg = r.theta.grid;
  std::vector<VectorField> w;
  for (int j = 0; j < sg.n_time; ++j) w.push_back(r.shifted->v(sg.time(j)));
  write_snapshot((out / "momentum.wgs").string(), FieldSnapshot::of(sg, w));
  write_snapshot((out / "theta.wgs").string(), FieldSnapshot::of(sg, r.theta.theta));
  write_snapshot((out / "rho.wgs").string(), FieldSnapshot::of(sg, rho0));

  // Budget schedule: e + (3/2) rho0 theta0 integrated in space is the
  // kinetic-energy allowance, which must fall with slope exactly K to the knee.
  const double knee = dissipative_knee(r.chi_tau, r.chi0, r.admissibility.k);
  const InitialData& init = *dc.data;
  std::vector<double> times, allowance;
  double slope_error = 0.0;
  for (int j = 0; j < sg.n_time; ++j) {
    const double t = sg.time(j);
    const ScalarField e = dissipative_budget(t, r.chi_tau, r.chi0, r.admissibility.k, rho0, init.theta0);
    const double a = integrate(e);
    times.push_back(t);
    allowance.push_back(a);
    if (t <= knee && j > 0)
      slope_error = std::max(slope_error, std::abs((allowance[j] - allowance[0]) / t + r.admissibility.k) /
                                              std::max(1.0, r.admissibility.k));
  }
  write_series_csv(out / "budget.csv", "t,allowance", {times, allowance});

  std::vector<std::string> violations;
  const auto& L = r.recursion.ledger;
  for (std::size_t k = 1; k < L.size(); ++k) {
    if (!(L[k].kinetic > L[k - 1].kinetic)) violations.push_back("kinetic energy not increasing at level " + std::to_string(k));
    if (!(L[k].defect < L[k - 1].defect)) violations.push_back("defect not decreasing at level " + std::to_string(k));
    if (k >= 2 && !(L[k].eps < L[k - 1].eps / 2)) violations.push_back("window not halved at level " + std::to_string(k));
    const double bound = std::ldexp(1.0, -static_cast<int>(k));
    if (!(L[k].metric_step < bound)) violations.push_back("metric step too large at level " + std::to_string(k));
    if (!(L[k].pairing < bound)) violations.push_back("pairing too large at level " + std::to_string(k));
  }
  if (!r.admissibility.passed) violations.push_back("admissibility failed");
  if (r.forced.passed) violations.push_back("forced K/100 unexpectedly admissible");
  if (slope_error > 1e-12) violations.push_back("budget slope differs from K");
  if (!(r.saturated_defect <= 1e-8)) violations.push_back("saturated target misses chi");

  ordered_json j;
  j["scenario"] = "dissipative";
  j["grid"] = {{"dim", sg.dim}, {"n_space", sg.n_space}, {"n_time", sg.n_time}, {"t_final", sg.t_final}};
  j["preset"] = dc.preset;
  j["seed"] = c.seed;
  j["depth"] = dc.depth;
  j["chi0"] = r.chi0;
  j["chi_bar"] = r.chi_bar;
  j["theta_bar"] = r.theta_bar;
  j["K"] = r.admissibility.k;
  j["peak"] = r.profile.peak;
  j["tau_bar"] = r.tau_bar;
  j["chi_tau"] = r.chi_tau;
  j["knee"] = knee;
  j["k_rounds"] = r.k_rounds;
  j["slope_error"] = slope_error;
  j["admissibility"] = admissibility_json(r.admissibility);
  j["forced"] = admissibility_json(r.forced);
  j["energy_defect"] = r.energy_defect;
  j["saturated_defect"] = r.saturated_defect;
  std::vector<double> defects;
  for (const auto& l : L) defects.push_back(l.defect);
  j["staircase_defects"] = defects;
  j["violations"] = violations;
  write_json(out / "report.json", j);

  log << "dissipative: K=" << r.admissibility.k << " tau_bar=" << r.tau_bar << " defect " << L.front().defect
      << " -> " << L.back().defect << " saturated " << r.saturated_defect << '\n';
  for (const auto& v : violations) log << "violation: " << v << '\n';
  return violations.empty() ? kSuccess : kInvariantViolation;
}

int run_weakstrong(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  const GridSpec g = grid_of(c);
  const double t_short = c.t_short.value_or(g.t_final);
  const double amp = c.perturbation.value_or(1e-2);
  const InitialData init = initial_data(c, g.space());

  const GasState ref = classical_solve(init.rho0, init.theta0, init.u0, t_short, g.n_time);
  const GasState same = classical_solve(init.rho0, init.theta0, init.u0, t_short, g.n_time);
  std::mt19937_64 rng(c.seed);
  const VectorField du = random_bandlimited_vector(g.space(), 2, amp, rng);
  const GasState pert = classical_solve(init.rho0, init.theta0, init.u0 + du, t_short, g.n_time);

  const WeakStrongReport identical = weak_strong_monitor(same, ref);
  const WeakStrongReport perturbed = weak_strong_monitor(pert, ref);
  const EnergyAudit energy = total_energy(ref);
  const RelEntropyReport ineq = rel_entropy_inequality_residual(pert, ref);
  const double min_ineq = *std::min_element(ineq.defect.begin(), ineq.defect.end());

  write_series_csv(out / "relent.csv", "t,identical,perturbed,inequality_defect",
                   {identical.times, identical.value, perturbed.value, ineq.defect});
  std::vector<VectorField> u = ref.u;
  GridSpec sg = ref.grid;
  write_snapshot((out / "velocity.wgs").string(), FieldSnapshot::of(sg, u));
  write_snapshot((out / "theta.wgs").string(), FieldSnapshot::of(sg, ref.theta));
  write_snapshot((out / "rho.wgs").string(), FieldSnapshot::of(sg, ref.rho));

  std::vector<std::string> violations;
  if (!(identical.max_value <= 1e-6)) violations.push_back("identical data separated");
  if (!(energy.defect <= 1e-6 * energy.energy.front())) violations.push_back("total energy not conserved");
  if (!(min_ineq >= -1e-6 * std::max(1.0, perturbed.max_value))) violations.push_back("relative entropy inequality fails");

  ordered_json j;
  j["scenario"] = "weakstrong";
  j["grid"] = {{"dim", sg.dim}, {"n_space", sg.n_space}, {"n_time", sg.n_time}, {"t_final", sg.t_final}};
  j["preset"] = preset_of(c);
  j["seed"] = c.seed;
  j["perturbation"] = amp;
  j["identical_max"] = identical.max_value;
  j["perturbed_initial"] = perturbed.initial;
  j["perturbed_max"] = perturbed.max_value;
  j["perturbed_growth"] = perturbed.growth;
  j["energy_defect"] = energy.defect;
  j["energy_initial"] = energy.energy.front();
  j["inequality_min_defect"] = min_ineq;
  j["violations"] = violations;
  write_json(out / "report.json", j);

  log << "weakstrong: identical " << identical.max_value << ", perturbed growth " << perturbed.growth << '\n';
  for (const auto& v : violations) log << "violation: " << v << '\n';
  return violations.empty() ? kSuccess : kInvariantViolation;
}

// Quick invariant suite at the configured grid size.
struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

int run_verify(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  const GridSpec g = grid_of(c);
  const SpaceGrid sg = g.space();
  std::mt19937_64 rng(c.seed);
  std::vector<Check> checks;
  auto record = [&](const std::string& name, double value, double limit) {
    checks.push_back({name, value, limit, value <= limit});
    log << (value <= limit ? "ok   " : "FAIL ") << name << " = " << value << " (limit " << limit << ")\n";
  };

  {  // kinetic inequality on random samples
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.1, 10.0);
    double worst = 0.0;
    for (int d = 2; d <= 3; ++d) {
      for (int i = 0; i < 2000; ++i) {
        std::vector<double> w(d);
        for (auto& x : w) x = nd(rng);
        SymMatrix u{d, {}};
        for (int a = 0; a < d; ++a)
          for (int b = a; b < d; ++b) u(a, b) = nd(rng);
        double tr = u.trace() / d;
        for (int a = 0; a < d; ++a) u(a, a) -= tr;
        const KineticCheck k = kinetic_inequality_check(w, u, ud(rng));
        worst = std::max(worst, (k.lhs - k.rhs) / std::max(1.0, k.rhs));
      }
    }
    record("kinetic_inequality_excess", worst, 1e-12);
  }

  const InitialData analytic = make_preset("analytic", sg);
  const Ansatz an = build_ansatz(g, analytic.rho0, analytic.u0);
  record("continuity_residual", continuity_residual(an), 1e-8);
  {
    const VectorField v = random_bandlimited_vector(sg, 4, 1.0, rng);
    const HelmholtzParts hz = helmholtz_decompose(v);
    record("helmholtz_round_trip", max_abs(hz.solenoidal + hz.gradient - v), 1e-9);
    record("helmholtz_divergence", max_abs(divergence(hz.solenoidal)), 1e-9);
  }
  record("h_at_ends", std::max(std::abs(an.h.value(0.0)), std::abs(an.h.value(g.t_final))), 1e-12);
  record("h_slope_at_zero", std::abs(an.h.d1(0.0) - 1.0), 1e-12);

  {  // comparison bounds against random velocities
    const ComparisonBounds cb = comparison_bounds(an, analytic.theta0);
    double excess = 0.0;
    for (int i = 0; i < 3; ++i) {
      const VectorField v = random_bandlimited_vector(sg, 3, 1.0, rng);
      const TemperatureSolve ts = solve_theta(SampledVelocity(g, helmholtz_decompose(v).solenoidal), an, analytic.theta0);
      excess = std::max({excess, cb.theta_lo - ts.theta_lo, ts.theta_hi - cb.theta_hi});
    }
    record("comparison_bound_excess", excess, 1e-6);
  }

  {  // relative entropy nonnegativity and coincidence
    std::uniform_real_distribution<double> ud(0.05, 5.0);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double r = ud(rng), th = ud(rng), R = ud(rng), Th = ud(rng);
      double du2 = 0.0;
      for (int a = 0; a < g.dim; ++a) du2 += std::pow(nd(rng), 2);
      const double e = 0.5 * r * du2 + ballistic_free_energy(r, th, Th) -
                       ballistic_free_energy_drho(R, Th, Th) * (r - R) - ballistic_free_energy(R, Th, Th);
      worst = std::max(worst, -e);
    }
    record("relative_entropy_negativity", worst, 1e-10);
  }

  {  // classical solver energy conservation
    const InitialData gen = make_preset("generic", sg);
    const GasState s = classical_solve(gen.rho0, gen.theta0, gen.u0, 0.01, 5);
    const EnergyAudit ea = total_energy(s);
    record("classical_energy_drift", ea.defect / ea.energy.front(), 1e-6);
    const GasState ref = classical_solve(gen.rho0, gen.theta0, gen.u0, 0.01, 5);
    record("weak_strong_identical", weak_strong_monitor(s, ref).max_value, 1e-6);
  }

  {  // one convex-integration step keeps membership and raises I_eps
    GridSpec wg = g;
    wg.t_final = 0.1;
    wg.n_time = 41;
    const InitialData gen = make_preset("generic", sg);
    Problem pb{build_ansatz(wg, gen.rho0, gen.u0), gen.theta0, {}, {}};
    const ComparisonBounds cb = comparison_bounds(pb.ansatz, pb.theta0);
    pb.chi = constant_profile(choose_chi(pb.ansatz, pb.ansatz.v0, cb.theta_hi));
    const Iterate first = evaluate(pb, SubsolutionState(pb.ansatz.v0));
    ConvintOptions opts;
    opts.seed = c.seed;
    const IterateResult r = iterate(pb, first, Schedule{wg.t_final / 10, 1, 1e-8}, opts);
    record("convint_stalled", r.stalled ? 1.0 : 0.0, 0.0);
    record("convint_i_eps_drop", r.i_eps.size() > 1 ? r.i_eps[0] - r.i_eps[1] : 1.0, -1e-300);
    record("convint_gap_negativity", -r.gap_min, 0.0);
  }

  {  // energy profile algebra
    const ChiProfile p = build_chi(1.0, 3.0, 40.0, 0.2);
    double worst = std::max(std::abs(p(0.0) - 1.0), std::abs(p(0.2) - 1.0));
    for (int i = 1; i < 100; ++i) {
      const double t = p.peak + (0.2 - p.peak) * i / 100.0;
      worst = std::max(worst, std::abs(p.slope(t) + 80.0) / 80.0);
    }
    record("chi_profile_error", worst, 1e-12);
  }

  ordered_json j;
  j["scenario"] = "verify";
  j["grid"] = {{"dim", g.dim}, {"n_space", g.n_space}};
  j["seed"] = c.seed;
  ordered_json arr = ordered_json::array();
  bool ok = true;
  for (const auto& ch : checks) {
    arr.push_back({{"name", ch.name}, {"value", ch.value}, {"limit", ch.limit}, {"passed", ch.passed}});
    ok = ok && ch.passed;
  }
  j["checks"] = arr;
  j["passed"] = ok;
  write_json(out / "report.json", j);
  return ok ? kSuccess : kInvariantViolation;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second) throw ConfigError("repeated key '" + key + "'");
    assign(c, key, value);
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end())
    throw ConfigError("unknown scenario '" + c.scenario + "'");
  const GridSpec g = grid_of(c);
  try {
    g.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (g.n_time < 5) throw ConfigError("n_time must be >= 5");
  const auto& presets = preset_names();
  const std::string preset = preset_of(c);
  if (std::find(presets.begin(), presets.end(), preset) == presets.end())
    throw ConfigError("unknown preset '" + preset + "'");
  if (has_data_files(c) && !(c.rho0_file && c.theta0_file && c.u0_file))
    throw ConfigError("rho0_file, theta0_file and u0_file must be given together");
  if (c.tau && !(*c.tau > 0.0 && *c.tau < g.t_final)) throw ConfigError("tau must lie in (0, t_final)");
  if (c.eps && !(*c.eps > 0.0 && *c.eps < g.t_final)) throw ConfigError("eps must lie in (0, t_final)");
  if (c.steps && *c.steps < 1) throw ConfigError("steps must be >= 1");
  if (c.depth && *c.depth < 1) throw ConfigError("depth must be >= 1");
  if (c.chi_bar && !(*c.chi_bar >= 0.0)) throw ConfigError("chi_bar must be >= 0");
  if (c.k && !(*c.k >= 0.0)) throw ConfigError("K must be >= 0");
  if (c.margin && !(*c.margin > 0.0)) throw ConfigError("margin must be positive");
  if (c.t_short && !(*c.t_short > 0.0)) throw ConfigError("t_short must be positive");
  if (c.perturbation && !(*c.perturbation >= 0.0)) throw ConfigError("perturbation must be >= 0");
}

int thread_cap() {
  const char* env = std::getenv("WILDGAS_THREADS");
  if (!env || !*env) return 1;
  const std::string s(env);
  int n = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc{} || ptr != s.data() + s.size() || n < 1)
    throw ConfigError("WILDGAS_THREADS must be a positive integer");
  return n;
}

int run(const ExperimentConfig& config, const fs::path& out, std::ostream& log) {
  try {
    validate(config);
    thread_cap();
    fs::create_directories(out);
    if (config.scenario == "wild") return run_wild(config, out, log);
    if (config.scenario == "dissipative") return run_dissipative(config, out, log);
    if (config.scenario == "weakstrong") return run_weakstrong(config, out, log);
    return run_verify(config, out, log);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StallAtLevel& e) {
    log << "stall: " << e.what() << '\n';
    return kStall;
  } catch (const StepStalled& e) {
    log << "stall: " << e.what() << '\n';
    return kStall;
  } catch (const InvalidArgument& e) {
    log << "precondition: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleProfile& e) {
    log << "precondition: " << e.what() << '\n';
    return kConfigError;
  } catch (const NotSolenoidal& e) {
    log << "precondition: " << e.what() << '\n';
    return kConfigError;
  } catch (const PreconditionFailed& e) {
    log << "precondition: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    log << "invariant violation: " << e.what() << '\n';
    return kInvariantViolation;
  }
}

}  // namespace wildgas::cli
