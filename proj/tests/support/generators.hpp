#pragma once

// Seeded generators for property tests. Every case is reproducible from the
// seed passed to for_all.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "wildgas/grid.hpp"

namespace wildgas::testing {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Runs `body(rng, case_index)` for `cases` draws from one seeded engine.
inline void for_all(int cases, std::uint64_t seed, const std::function<void(std::mt19937_64&, int)>& body) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < cases; ++i) body(rng, i);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(std::mt19937_64& rng) { return std::normal_distribution<double>()(rng); }

/// Trigonometric polynomial sum_m c_m cos(2 pi k_m.x) + s_m sin(2 pi k_m.x)
/// with closed-form derivatives, used as an oracle for the spectral calculus.
struct TrigPoly {
  int dim = 2;
  std::vector<std::array<int, 3>> k;
  std::vector<double> c;
  std::vector<double> s;

  double phase(int m, const double* x) const {
    double a = 0.0;
    for (int i = 0; i < dim; ++i) a += k[m][i] * x[i];
    return kTwoPi * a;
  }
  double value(const double* x) const {
    double v = 0.0;
    for (std::size_t m = 0; m < k.size(); ++m) {
      const double a = phase(static_cast<int>(m), x);
      v += c[m] * std::cos(a) + s[m] * std::sin(a);
    }
    return v;
  }
  double derivative(const double* x, int axis) const {
    double v = 0.0;
    for (std::size_t m = 0; m < k.size(); ++m) {
      const double a = phase(static_cast<int>(m), x);
      v += kTwoPi * k[m][axis] * (-c[m] * std::sin(a) + s[m] * std::cos(a));
    }
    return v;
  }
  double laplacian(const double* x) const {
    double v = 0.0;
    for (std::size_t m = 0; m < k.size(); ++m) {
      double k2 = 0.0;
      for (int i = 0; i < dim; ++i) k2 += double(k[m][i]) * k[m][i];
      const double a = phase(static_cast<int>(m), x);
      v -= kTwoPi * kTwoPi * k2 * (c[m] * std::cos(a) + s[m] * std::sin(a));
    }
    return v;
  }
};

/// Random polynomial with `modes` nonzero wave vectors, |k_i| <= kmax.
inline TrigPoly random_trig(std::mt19937_64& rng, int dim, int kmax, int modes) {
  TrigPoly p;
  p.dim = dim;
  std::uniform_int_distribution<int> kd(-kmax, kmax);
  while (static_cast<int>(p.k.size()) < modes) {
    std::array<int, 3> k{0, 0, 0};
    bool zero = true;
    for (int i = 0; i < dim; ++i) {
      k[i] = kd(rng);
      zero = zero && k[i] == 0;
    }
    if (zero) continue;
    p.k.push_back(k);
    p.c.push_back(normal(rng));
    p.s.push_back(normal(rng));
  }
  return p;
}

template <typename F>
ScalarField tabulate(const SpaceGrid& g, F f) {
  ScalarField r(g);
  std::array<double, 3> x{};
  for (std::size_t p = 0; p < r.size(); ++p) {
    for (int a = 0; a < g.dim; ++a) x[a] = g.coord(p, a);
    r[p] = f(x.data());
  }
  return r;
}

inline ScalarField tabulate(const SpaceGrid& g, const TrigPoly& poly) {
  return tabulate(g, [&](const double* x) { return poly.value(x); });
}

inline VectorField random_vector(std::mt19937_64& rng, const SpaceGrid& g, int kmax, int modes) {
  VectorField v(g);
  for (int c = 0; c < g.dim; ++c) v.set_component(c, tabulate(g, random_trig(rng, g.dim, kmax, modes)));
  return v;
}

inline double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) m = std::max(m, std::abs(a[p] - b[p]));
  return m;
}

inline double max_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (int c = 0; c < a.dim(); ++c)
    for (std::size_t p = 0; p < a.points(); ++p) m = std::max(m, std::abs(a.comp[c][p] - b.comp[c][p]));
  return m;
}

}  // namespace wildgas::testing
