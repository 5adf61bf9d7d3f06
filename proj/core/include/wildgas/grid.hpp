#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace wildgas {

/// Uniform collocation grid on the flat torus [0,1)^d, d in {2,3}.
struct SpaceGrid {
  int dim = 2;
  int n = 32;

  std::size_t points() const;
  /// Coordinate of grid point `p` along `axis`, in [0,1).
  double coord(std::size_t p, int axis) const;
  /// Number of independent components of a symmetric d x d tensor.
  int sym_components() const { return dim * (dim + 1) / 2; }
  void validate() const;

  friend bool operator==(const SpaceGrid&, const SpaceGrid&) = default;
};

/// Space grid plus uniform time sampling t_j = j * t_final / (n_time - 1).
struct GridSpec {
  int dim = 2;
  int n_space = 32;
  int n_time = 33;
  double t_final = 1.0;

  SpaceGrid space() const { return {dim, n_space}; }
  double dt() const { return t_final / (n_time - 1); }
  double time(int j) const { return t_final * j / (n_time - 1); }
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Index of the (i,j) entry inside the packed upper triangle of a
/// symmetric tensor: 2D (00,01,11), 3D (00,01,02,11,12,22).
int sym_index(int dim, int i, int j);

struct ScalarField {
  SpaceGrid grid;
  std::vector<double> data;

  ScalarField() = default;
  explicit ScalarField(const SpaceGrid& g, double value = 0.0);

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t p) { return data[p]; }
  double operator[](std::size_t p) const { return data[p]; }
};

struct VectorField {
  SpaceGrid grid;
  std::vector<std::vector<double>> comp;

  VectorField() = default;
  explicit VectorField(const SpaceGrid& g, double value = 0.0);

  int dim() const { return grid.dim; }
  std::size_t points() const { return grid.points(); }
  ScalarField component(int c) const;
  void set_component(int c, const ScalarField& f);
};

/// Symmetric tensor field stored as the packed upper triangle.
struct SymTensorField {
  SpaceGrid grid;
  std::vector<std::vector<double>> comp;

  SymTensorField() = default;
  explicit SymTensorField(const SpaceGrid& g, double value = 0.0);

  double at(std::size_t p, int i, int j) const {
    return comp[sym_index(grid.dim, i, j)][p];
  }
  /// max_p |trace|
  double max_abs_trace() const;
};

void require_same_grid(const SpaceGrid& a, const SpaceGrid& b);

double mean(const ScalarField& f);
double max_abs(const ScalarField& f);
double max_abs(const VectorField& v);
double min_value(const ScalarField& f);
double max_value(const ScalarField& f);
/// max_p |v(p)| (Euclidean norm per point).
double max_norm(const VectorField& v);
/// Spatial integral over the unit torus, i.e. the grid mean.
double integrate(const ScalarField& f);
double inner(const VectorField& a, const VectorField& b);

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(double s, const VectorField& a);
SymTensorField operator+(const SymTensorField& a, const SymTensorField& b);
SymTensorField operator*(double s, const SymTensorField& a);

/// y += s * x
void axpy(double s, const VectorField& x, VectorField& y);
void axpy(double s, const SymTensorField& x, SymTensorField& y);

}  // namespace wildgas
