#include "wildgas/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wildgas/errors.hpp"

namespace wildgas {

std::size_t SpaceGrid::points() const {
  std::size_t p = 1;
  for (int i = 0; i < dim; ++i) p *= static_cast<std::size_t>(n);
  return p;
}

double SpaceGrid::coord(std::size_t p, int axis) const {
  std::size_t stride = 1;
  for (int j = dim - 1; j > axis; --j) stride *= static_cast<std::size_t>(n);
  return static_cast<double>((p / stride) % static_cast<std::size_t>(n)) / n;
}

void SpaceGrid::validate() const {
  if (dim != 2 && dim != 3) {
    throw InvalidArgument("dim must be 2 or 3, got " + std::to_string(dim));
  }
  if (n < 8 || (n & (n - 1)) != 0) {
    throw InvalidArgument("n_space must be a power of two >= 8, got " + std::to_string(n));
  }
}

void GridSpec::validate() const {
  space().validate();
  if (n_time < 2) throw InvalidArgument("n_time must be >= 2");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw InvalidArgument("t_final must be > 0");
}

int sym_index(int dim, int i, int j) {
  if (i > j) std::swap(i, j);
  if (dim == 2) return i == 0 ? j : 2;
  // 3D: rows start at 0, 3, 5
  static constexpr int row_start[3] = {0, 3, 5};
  return row_start[i] + (j - i);
}

ScalarField::ScalarField(const SpaceGrid& g, double value) : grid(g), data(g.points(), value) {}

VectorField::VectorField(const SpaceGrid& g, double value)
    : grid(g), comp(static_cast<std::size_t>(g.dim), std::vector<double>(g.points(), value)) {}

ScalarField VectorField::component(int c) const {
  ScalarField f;
  f.grid = grid;
  f.data = comp[c];
  return f;
}

void VectorField::set_component(int c, const ScalarField& f) {
  require_same_grid(grid, f.grid);
  comp[c] = f.data;
}

SymTensorField::SymTensorField(const SpaceGrid& g, double value)
    : grid(g),
      comp(static_cast<std::size_t>(g.sym_components()), std::vector<double>(g.points(), value)) {}

double SymTensorField::max_abs_trace() const {
  double m = 0.0;
  for (std::size_t p = 0; p < grid.points(); ++p) {
    double tr = 0.0;
    for (int i = 0; i < grid.dim; ++i) tr += at(p, i, i);
    m = std::max(m, std::abs(tr));
  }
  return m;
}

void require_same_grid(const SpaceGrid& a, const SpaceGrid& b) {
  if (!(a == b)) throw GridMismatch("fields live on different grids");
}

double mean(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.data) s += x;
  return s / static_cast<double>(f.data.size());
}

double integrate(const ScalarField& f) { return mean(f); }

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.data) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const VectorField& v) {
  double m = 0.0;
  for (const auto& c : v.comp)
    for (double x : c) m = std::max(m, std::abs(x));
  return m;
}

double min_value(const ScalarField& f) { return *std::min_element(f.data.begin(), f.data.end()); }
double max_value(const ScalarField& f) { return *std::max_element(f.data.begin(), f.data.end()); }

double max_norm(const VectorField& v) {
  double m = 0.0;
  for (std::size_t p = 0; p < v.points(); ++p) {
    double s = 0.0;
    for (const auto& c : v.comp) s += c[p] * c[p];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid);
  double s = 0.0;
  for (int c = 0; c < a.dim(); ++c)
    for (std::size_t p = 0; p < a.points(); ++p) s += a.comp[c][p] * b.comp[c][p];
  return s / static_cast<double>(a.points());
}

namespace {

template <typename F>
ScalarField zip(const ScalarField& a, const ScalarField& b, F f) {
  require_same_grid(a.grid, b.grid);
  ScalarField r(a.grid);
  for (std::size_t p = 0; p < r.size(); ++p) r[p] = f(a[p], b[p]);
  return r;
}

template <typename Field, typename F>
Field zip_components(const Field& a, const Field& b, F f) {
  require_same_grid(a.grid, b.grid);
  Field r = a;
  for (std::size_t c = 0; c < r.comp.size(); ++c)
    for (std::size_t p = 0; p < r.comp[c].size(); ++p) r.comp[c][p] = f(a.comp[c][p], b.comp[c][p]);
  return r;
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
ScalarField operator*(double s, const ScalarField& a) {
  ScalarField r = a;
  for (double& x : r.data) x *= s;
  return r;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  return zip_components(a, b, [](double x, double y) { return x + y; });
}
VectorField operator-(const VectorField& a, const VectorField& b) {
  return zip_components(a, b, [](double x, double y) { return x - y; });
}
VectorField operator*(double s, const VectorField& a) {
  VectorField r = a;
  for (auto& c : r.comp)
    for (double& x : c) x *= s;
  return r;
}

SymTensorField operator+(const SymTensorField& a, const SymTensorField& b) {
  return zip_components(a, b, [](double x, double y) { return x + y; });
}
SymTensorField operator*(double s, const SymTensorField& a) {
  SymTensorField r = a;
  for (auto& c : r.comp)
    for (double& x : c) x *= s;
  return r;
}

void axpy(double s, const VectorField& x, VectorField& y) {
  require_same_grid(x.grid, y.grid);
  for (std::size_t c = 0; c < y.comp.size(); ++c)
    for (std::size_t p = 0; p < y.comp[c].size(); ++p) y.comp[c][p] += s * x.comp[c][p];
}

void axpy(double s, const SymTensorField& x, SymTensorField& y) {
  require_same_grid(x.grid, y.grid);
  for (std::size_t c = 0; c < y.comp.size(); ++c)
    for (std::size_t p = 0; p < y.comp[c].size(); ++p) y.comp[c][p] += s * x.comp[c][p];
}

}  // namespace wildgas
