#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "wildgas/errors.hpp"
#include "wildgas/snapshot.hpp"
#include "wildgas/spectral.hpp"

namespace wildgas {
namespace {

using testing::for_all;
using testing::kTwoPi;
using testing::max_diff;
using testing::tabulate;

TEST(SpectralDerivative, SineIsExact) {
  const SpaceGrid g{2, 32};
  const ScalarField f = tabulate(g, [](const double* x) { return std::sin(kTwoPi * x[0]); });
  const ScalarField expect = tabulate(g, [](const double* x) { return kTwoPi * std::cos(kTwoPi * x[0]); });
  EXPECT_LE(max_diff(spectral_derivative(f, 0), expect), 1e-10);
  EXPECT_LE(max_abs(spectral_derivative(f, 1)), 1e-10);
}

TEST(SpectralDerivative, ConstantHasZeroDerivative) {
  const ScalarField f(SpaceGrid{3, 16}, 4.25);
  for (int a = 0; a < 3; ++a) EXPECT_LE(max_abs(spectral_derivative(f, a)), 1e-12);
}

TEST(SpectralDerivative, AxisOutOfRange) {
  const ScalarField f(SpaceGrid{2, 16}, 1.0);
  EXPECT_THROW(spectral_derivative(f, 2), InvalidArgument);
  EXPECT_THROW(spectral_derivative(f, -1), InvalidArgument);
}

TEST(SpectralDerivative, MatchesFourthOrderDifferences) {
  // Fourth-order central differences converge at rate 4 to the spectral derivative.
  std::mt19937_64 rng(11);
  const testing::TrigPoly poly = testing::random_trig(rng, 2, 3, 6);
  double prev = 0.0;
  for (int n : {32, 64}) {
    const SpaceGrid g{2, n};
    const ScalarField f = tabulate(g, poly);
    const ScalarField d = spectral_derivative(f, 0);
    const double h = 1.0 / n;
    double err = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) {
      const std::size_t i = p / n, j = p % n;  // row-major, axis 0 slowest
      auto at = [&](int di) { return f[((i + n + di) % n) * n + j]; };
      const double fd = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
      err = std::max(err, std::abs(fd - d[p]));
    }
    if (prev > 0.0) EXPECT_GT(prev / err, 12.0);
    prev = err;
  }
}

TEST(SpectralDerivative, RandomPolynomialsAgainstClosedForm) {
  for_all(20, 3, [](std::mt19937_64& rng, int) {
    const int dim = 2 + static_cast<int>(rng() % 2);
    const SpaceGrid g{dim, 16};
    const testing::TrigPoly poly = testing::random_trig(rng, dim, 5, 4);
    const ScalarField f = tabulate(g, poly);
    for (int a = 0; a < dim; ++a) {
      const ScalarField expect = tabulate(g, [&](const double* x) { return poly.derivative(x, a); });
      EXPECT_LE(max_diff(spectral_derivative(f, a), expect), 1e-9);
    }
  });
}

TEST(PoissonSolve, Eigenfunction) {
  const SpaceGrid g{2, 32};
  const ScalarField f = tabulate(g, [](const double* x) {
    return -kTwoPi * kTwoPi * 2 * std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
  });
  const ScalarField expect =
      tabulate(g, [](const double* x) { return std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]); });
  EXPECT_LE(max_diff(poisson_solve(f), expect), 1e-12);
}

TEST(PoissonSolve, ZeroSource) {
  EXPECT_EQ(max_abs(poisson_solve(ScalarField(SpaceGrid{3, 8}, 0.0))), 0.0);
}

TEST(PoissonSolve, RejectsNonZeroMean) {
  EXPECT_THROW(poisson_solve(ScalarField(SpaceGrid{2, 16}, 1e-3)), NonZeroMean);
}

TEST(PoissonSolve, LaplacianInverseOnRandomFields) {
  for_all(20, 5, [](std::mt19937_64& rng, int) {
    const int dim = 2 + static_cast<int>(rng() % 2);
    const SpaceGrid g{dim, 16};
    const ScalarField f = tabulate(g, testing::random_trig(rng, dim, 6, 5));
    const ScalarField psi = poisson_solve(f);
    EXPECT_LE(max_diff(laplacian(psi), f), 1e-9);
    EXPECT_LE(std::abs(mean(psi)), 1e-12);
    // Laplacian then inverse returns the zero-mean field.
    EXPECT_LE(max_diff(poisson_solve(laplacian(psi)), psi), 1e-9);
  });
}

TEST(Helmholtz, SolenoidalFieldIsKept) {
  const SpaceGrid g{2, 32};
  VectorField w(g);
  // Curl of a stream function plus a constant mean flow.
  const ScalarField sx = tabulate(g, [](const double* x) { return 0.3 + kTwoPi * std::cos(kTwoPi * x[1]); });
  w.set_component(0, sx);
  w.set_component(1, tabulate(g, [](const double* x) { return std::sin(kTwoPi * 2 * x[0]); }));
  const HelmholtzParts h = helmholtz_decompose(w);
  EXPECT_LE(max_diff(h.solenoidal, w), 1e-12);
  EXPECT_LE(max_abs(h.gradient), 1e-12);
}

TEST(Helmholtz, GradientFieldIsKept) {
  std::mt19937_64 rng(17);
  const SpaceGrid g{3, 16};
  const ScalarField phi = tabulate(g, testing::random_trig(rng, 3, 4, 5));
  const VectorField w = gradient(phi);
  const HelmholtzParts h = helmholtz_decompose(w);
  EXPECT_LE(max_abs(h.solenoidal), 1e-10);
  EXPECT_LE(max_diff(h.gradient, w), 1e-10);
}

TEST(Helmholtz, RandomFieldProperties) {
  for_all(20, 23, [](std::mt19937_64& rng, int) {
    const int dim = 2 + static_cast<int>(rng() % 2);
    const SpaceGrid g{dim, 16};
    VectorField w = testing::random_vector(rng, g, 5, 4);
    for (int c = 0; c < dim; ++c)
      for (double& x : w.comp[c]) x += 0.1 * (c + 1);  // nonzero mean
    const HelmholtzParts h = helmholtz_decompose(w);
    EXPECT_LE(max_diff(h.solenoidal + h.gradient, w), 1e-9);
    EXPECT_LE(max_abs(divergence(h.solenoidal)), 1e-10);
    EXPECT_LE(std::abs(inner(h.solenoidal, h.gradient)), 1e-9);
    for (int c = 0; c < dim; ++c) {
      EXPECT_NEAR(mean(h.solenoidal.component(c)), 0.1 * (c + 1), 1e-12);
      EXPECT_LE(std::abs(mean(h.gradient.component(c))), 1e-12);
    }
    // Idempotence.
    const HelmholtzParts again = helmholtz_decompose(h.solenoidal);
    EXPECT_LE(max_diff(again.solenoidal, h.solenoidal), 1e-10);
    EXPECT_LE(max_abs(again.gradient), 1e-10);
  });
}

TEST(Grid, Validation) {
  EXPECT_THROW((GridSpec{1, 32, 5, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{2, 12, 5, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{2, 4, 5, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{2, 16, 1, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((GridSpec{2, 16, 5, 0.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW((GridSpec{3, 8, 2, 0.5}.validate()));
}

TEST(Grid, FieldsOnDifferentGridsDoNotMix) {
  EXPECT_THROW(ScalarField(SpaceGrid{2, 8}) + ScalarField(SpaceGrid{2, 16}), GridMismatch);
}

TEST(Snapshot, RoundTrip) {
  std::mt19937_64 rng(29);
  const GridSpec g{2, 8, 3, 0.5};
  std::vector<VectorField> hist;
  for (int j = 0; j < 3; ++j) hist.push_back(testing::random_vector(rng, g.space(), 3, 3));
  const std::string path = ::testing::TempDir() + "snap.wgs";
  write_snapshot(path, FieldSnapshot::of(g, hist));
  const FieldSnapshot back = read_snapshot(path);
  EXPECT_EQ(back.grid, g);
  EXPECT_EQ(back.slices, 3);
  EXPECT_EQ(back.components, 2);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(max_diff(back.vector(j), hist[j]), 0.0);
}

TEST(Snapshot, RejectsGarbage) {
  const std::string path = ::testing::TempDir() + "garbage.wgs";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a snapshot", f);
    std::fclose(f);
  }
  EXPECT_THROW(read_snapshot(path), SnapshotError);
}

}  // namespace
}  // namespace wildgas
