#include <random>

#include <benchmark/benchmark.h>

#include "wildgas/ansatz.hpp"
#include "wildgas/heat.hpp"
#include "wildgas/presets.hpp"
#include "wildgas/spectral.hpp"
#include "wildgas/subsolution.hpp"

namespace {

using namespace wildgas;

void BM_ForwardBackward(benchmark::State& state) {
  const SpaceGrid g{static_cast<int>(state.range(0)), static_cast<int>(state.range(1))};
  std::mt19937_64 rng(1);
  const ScalarField f = random_bandlimited(g, 4, 1.0, rng);
  const Spectral& sp = Spectral::on(g);
  for (auto _ : state) benchmark::DoNotOptimize(sp.backward(sp.forward(f.data)));
}
BENCHMARK(BM_ForwardBackward)->Args({2, 32})->Args({2, 64})->Args({2, 128})->Args({3, 32});

void BM_Helmholtz(benchmark::State& state) {
  const SpaceGrid g{2, static_cast<int>(state.range(0))};
  std::mt19937_64 rng(2);
  const VectorField v = random_bandlimited_vector(g, 4, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(helmholtz_decompose(v));
}
BENCHMARK(BM_Helmholtz)->Arg(32)->Arg(64)->Arg(128);

void BM_LambdaMax3(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  SymMatrix m{3, {}};
  for (auto& c : m.c) c = nd(rng);
  const double tr = m.trace() / 3;
  for (int a = 0; a < 3; ++a) m(a, a) -= tr;
  for (auto _ : state) benchmark::DoNotOptimize(lambda_max_traceless(m));
}
BENCHMARK(BM_LambdaMax3);

void BM_HeatSolve(benchmark::State& state) {
  const GridSpec g{2, static_cast<int>(state.range(0)), 17, 0.05};
  const InitialData init = make_preset("generic", g.space());
  const Ansatz an = build_ansatz(g, init.rho0, init.u0);
  const SampledVelocity v(g, an.v0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_theta(v, an, init.theta0));
}
BENCHMARK(BM_HeatSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
