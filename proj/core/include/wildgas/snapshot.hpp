#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wildgas/grid.hpp"

namespace wildgas {

/// On-disk field snapshot. Little-endian binary layout:
///
///   char[8]  magic "WGSNAP01"
///   int32    dim, n_space, n_time
///   float64  t_final
///   int32    slices       (1 for a static field, n_time for a trajectory)
///   int32    components   (1 scalar, d vector, d(d+1)/2 symmetric tensor)
///   float64  samples[slices][components][points]   row-major, last axis fastest
struct FieldSnapshot {
  GridSpec grid;
  int slices = 1;
  int components = 1;
  std::vector<double> samples;

  static FieldSnapshot of(const GridSpec& grid, const ScalarField& f);
  static FieldSnapshot of(const GridSpec& grid, const VectorField& v);
  static FieldSnapshot of(const GridSpec& grid, const std::vector<ScalarField>& history);
  static FieldSnapshot of(const GridSpec& grid, const std::vector<VectorField>& history);

  ScalarField scalar(int slice = 0) const;
  VectorField vector(int slice = 0) const;
};

void write_snapshot(const std::string& path, const FieldSnapshot& snap);
FieldSnapshot read_snapshot(const std::string& path);

}  // namespace wildgas
