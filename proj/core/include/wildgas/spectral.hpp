#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "wildgas/grid.hpp"

namespace wildgas {

using Spectrum = std::vector<std::complex<double>>;

/// FFTW-backed real-to-complex transforms on one periodic grid, plus the
/// integer wavenumber tables needed by the spectral operators.
///
/// A Spectral object owns scratch buffers, so a single instance must not be
/// used from two threads at once. `Spectral::on(grid)` hands out a cached
/// per-grid instance for single-threaded callers.
class Spectral {
 public:
  explicit Spectral(const SpaceGrid& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  static Spectral& on(const SpaceGrid& grid);

  const SpaceGrid& grid() const { return grid_; }
  std::size_t modes() const { return modes_; }

  Spectrum forward(const std::vector<double>& f) const;
  /// Normalized inverse transform (forward followed by backward is identity).
  std::vector<double> backward(const Spectrum& s) const;

  /// Signed integer wavenumber of mode `m` along `axis`.
  int wavenumber(std::size_t m, int axis) const { return k_[axis][m]; }
  /// True when the mode sits on the Nyquist plane of `axis`; odd derivatives
  /// along that axis vanish there.
  bool nyquist(std::size_t m, int axis) const { return nyq_[axis][m] != 0; }
  /// 2 pi k used by first derivatives (zero on the Nyquist plane).
  double deriv_factor(std::size_t m, int axis) const {
    return nyquist(m, axis) ? 0.0 : 2.0 * kPi * k_[axis][m];
  }
  /// |2 pi k|^2 with the true wavenumber (Nyquist included).
  double laplace_symbol(std::size_t m) const { return lap_[m]; }
  /// True when the 2/3 rule keeps this mode.
  bool dealias_keep(std::size_t m) const { return keep_[m] != 0; }

  static constexpr double kPi = 3.14159265358979323846;

 private:
  SpaceGrid grid_;
  std::size_t points_;
  std::size_t modes_;
  std::vector<std::vector<int>> k_;
  std::vector<std::vector<char>> nyq_;
  std::vector<double> lap_;
  std::vector<char> keep_;
  double* rbuf_;
  void* cbuf_;
  void* plan_fwd_;
  void* plan_bwd_;
};

ScalarField spectral_derivative(const ScalarField& f, int axis);
ScalarField laplacian(const ScalarField& f);
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);

/// Solves Delta psi = f with zero mean. Throws NonZeroMean when
/// |mean(f)| > mean_tol.
ScalarField poisson_solve(const ScalarField& f, double mean_tol = 1e-10);

struct HelmholtzParts {
  VectorField solenoidal;
  VectorField gradient;
};

/// w = v + grad psi with div v = 0 (spectrally) and psi of zero mean; the
/// mean of w stays in v.
HelmholtzParts helmholtz_decompose(const VectorField& w);

/// Zeroes every mode outside the 2/3 band.
ScalarField dealias(const ScalarField& f);

/// Fraction of spectral energy carried by modes with max_j |k_j| > n/4.
double spectral_tail_fraction(const ScalarField& f);

}  // namespace wildgas
