#include "wildgas/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <utility>

#include "wildgas/errors.hpp"

namespace wildgas {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

}  // namespace

Spectral::Spectral(const SpaceGrid& grid) : grid_(grid) {
  grid_.validate();
  const int d = grid_.dim;
  const int n = grid_.n;
  const int nh = n / 2 + 1;
  points_ = grid_.points();
  modes_ = points_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(nh);

  k_.assign(d, std::vector<int>(modes_));
  nyq_.assign(d, std::vector<char>(modes_));
  lap_.resize(modes_);
  keep_.resize(modes_);
  const double kcut = n / 3.0;
  for (std::size_t m = 0; m < modes_; ++m) {
    std::size_t rest = m;
    double k2 = 0.0;
    bool keep = true;
    for (int axis = d - 1; axis >= 0; --axis) {
      const int extent = axis == d - 1 ? nh : n;
      const int i = static_cast<int>(rest % static_cast<std::size_t>(extent));
      rest /= static_cast<std::size_t>(extent);
      const int k = (axis == d - 1 || i <= n / 2) ? i : i - n;
      k_[axis][m] = k;
      nyq_[axis][m] = (std::abs(k) == n / 2) ? 1 : 0;
      k2 += static_cast<double>(k) * k;
      if (std::abs(k) > kcut) keep = false;
    }
    lap_[m] = 4.0 * kPi * kPi * k2;
    keep_[m] = keep ? 1 : 0;
  }

  rbuf_ = fftw_alloc_real(points_);
  auto* cbuf = fftw_alloc_complex(modes_);
  cbuf_ = cbuf;
  std::vector<int> dims(d, n);
  plan_fwd_ = fftw_plan_dft_r2c(d, dims.data(), rbuf_, cbuf, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft_c2r(d, dims.data(), cbuf, rbuf_, FFTW_ESTIMATE);
}

Spectral::~Spectral() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

Spectral& Spectral::on(const SpaceGrid& grid) {
  static std::map<std::pair<int, int>, std::unique_ptr<Spectral>> cache;
  auto& slot = cache[{grid.dim, grid.n}];
  if (!slot) slot = std::make_unique<Spectral>(grid);
  return *slot;
}

Spectrum Spectral::forward(const std::vector<double>& f) const {
  if (f.size() != points_) throw GridMismatch("forward transform size mismatch");
  std::memcpy(rbuf_, f.data(), points_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  Spectrum s(modes_);
  std::memcpy(s.data(), cbuf_, modes_ * sizeof(fftw_complex));
  return s;
}

std::vector<double> Spectral::backward(const Spectrum& s) const {
  if (s.size() != modes_) throw GridMismatch("backward transform size mismatch");
  std::memcpy(cbuf_, s.data(), modes_ * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  std::vector<double> f(points_);
  const double scale = 1.0 / static_cast<double>(points_);
  for (std::size_t p = 0; p < points_; ++p) f[p] = rbuf_[p] * scale;
  return f;
}

ScalarField spectral_derivative(const ScalarField& f, int axis) {
  if (axis < 0 || axis >= f.grid.dim) {
    throw InvalidArgument("derivative axis " + std::to_string(axis) + " out of range");
  }
  const auto& sp = Spectral::on(f.grid);
  Spectrum s = sp.forward(f.data);
  for (std::size_t m = 0; m < s.size(); ++m) s[m] *= kI * sp.deriv_factor(m, axis);
  ScalarField r(f.grid);
  r.data = sp.backward(s);
  return r;
}

ScalarField laplacian(const ScalarField& f) {
  const auto& sp = Spectral::on(f.grid);
  Spectrum s = sp.forward(f.data);
  for (std::size_t m = 0; m < s.size(); ++m) s[m] *= -sp.laplace_symbol(m);
  ScalarField r(f.grid);
  r.data = sp.backward(s);
  return r;
}

VectorField gradient(const ScalarField& f) {
  const auto& sp = Spectral::on(f.grid);
  const Spectrum s = sp.forward(f.data);
  VectorField g(f.grid);
  for (int axis = 0; axis < f.grid.dim; ++axis) {
    Spectrum t(s.size());
    for (std::size_t m = 0; m < s.size(); ++m) t[m] = s[m] * (kI * sp.deriv_factor(m, axis));
    g.comp[axis] = sp.backward(t);
  }
  return g;
}

ScalarField divergence(const VectorField& v) {
  const auto& sp = Spectral::on(v.grid);
  Spectrum acc(sp.modes());
  for (int axis = 0; axis < v.dim(); ++axis) {
    const Spectrum s = sp.forward(v.comp[axis]);
    for (std::size_t m = 0; m < s.size(); ++m) acc[m] += s[m] * (kI * sp.deriv_factor(m, axis));
  }
  ScalarField r(v.grid);
  r.data = sp.backward(acc);
  return r;
}

ScalarField poisson_solve(const ScalarField& f, double mean_tol) {
  const double mu = mean(f);
  if (std::abs(mu) > mean_tol) {
    throw NonZeroMean("source mean " + std::to_string(mu) + " exceeds tolerance");
  }
  const auto& sp = Spectral::on(f.grid);
  Spectrum s = sp.forward(f.data);
  s[0] = 0.0;
  for (std::size_t m = 1; m < s.size(); ++m) s[m] /= -sp.laplace_symbol(m);
  ScalarField r(f.grid);
  r.data = sp.backward(s);
  return r;
}

HelmholtzParts helmholtz_decompose(const VectorField& w) {
  const auto& sp = Spectral::on(w.grid);
  const int d = w.dim();
  std::vector<Spectrum> ws;
  ws.reserve(d);
  for (int c = 0; c < d; ++c) ws.push_back(sp.forward(w.comp[c]));

  // Projection onto gradients with the first-derivative symbol, so that the
  // discrete divergence of the remainder vanishes identically.
  std::vector<Spectrum> gs(d, Spectrum(sp.modes()));
  for (std::size_t m = 0; m < sp.modes(); ++m) {
    double kk = 0.0;
    std::complex<double> kw = 0.0;
    for (int c = 0; c < d; ++c) {
      const double kc = sp.deriv_factor(m, c);
      kk += kc * kc;
      kw += kc * ws[c][m];
    }
    if (kk == 0.0) continue;
    for (int c = 0; c < d; ++c) gs[c][m] = sp.deriv_factor(m, c) * kw / kk;
  }

  HelmholtzParts parts{VectorField(w.grid), VectorField(w.grid)};
  for (int c = 0; c < d; ++c) {
    parts.gradient.comp[c] = sp.backward(gs[c]);
    for (std::size_t p = 0; p < w.points(); ++p) {
      parts.solenoidal.comp[c][p] = w.comp[c][p] - parts.gradient.comp[c][p];
    }
  }
  return parts;
}

ScalarField dealias(const ScalarField& f) {
  const auto& sp = Spectral::on(f.grid);
  Spectrum s = sp.forward(f.data);
  for (std::size_t m = 0; m < s.size(); ++m)
    if (!sp.dealias_keep(m)) s[m] = 0.0;
  ScalarField r(f.grid);
  r.data = sp.backward(s);
  return r;
}

double spectral_tail_fraction(const ScalarField& f) {
  const auto& sp = Spectral::on(f.grid);
  const Spectrum s = sp.forward(f.data);
  const int d = f.grid.dim;
  const int n = f.grid.n;
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const int klast = sp.wavenumber(m, d - 1);
    // Half-spectrum storage: interior modes of the last axis stand for a pair.
    const double weight = (klast == 0 || klast == n / 2) ? 1.0 : 2.0;
    const double e = weight * std::norm(s[m]);
    total += e;
    int kmax = 0;
    for (int axis = 0; axis < d; ++axis) kmax = std::max(kmax, std::abs(sp.wavenumber(m, axis)));
    if (kmax > n / 4) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace wildgas
