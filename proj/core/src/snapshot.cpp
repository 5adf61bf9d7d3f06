#include "wildgas/snapshot.hpp"

#include <cstring>
#include <fstream>

#include "wildgas/errors.hpp"

namespace wildgas {

namespace {

constexpr char kMagic[8] = {'W', 'G', 'S', 'N', 'A', 'P', '0', '1'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw SnapshotError("truncated header");
  return value;
}

void append(std::vector<double>& dst, const std::vector<double>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

FieldSnapshot FieldSnapshot::of(const GridSpec& grid, const ScalarField& f) {
  return of(grid, std::vector<ScalarField>{f});
}

FieldSnapshot FieldSnapshot::of(const GridSpec& grid, const VectorField& v) {
  return of(grid, std::vector<VectorField>{v});
}

FieldSnapshot FieldSnapshot::of(const GridSpec& grid, const std::vector<ScalarField>& history) {
  FieldSnapshot s;
  s.grid = grid;
  s.slices = static_cast<int>(history.size());
  s.components = 1;
  for (const auto& f : history) {
    require_same_grid(f.grid, grid.space());
    append(s.samples, f.data);
  }
  return s;
}

FieldSnapshot FieldSnapshot::of(const GridSpec& grid, const std::vector<VectorField>& history) {
  FieldSnapshot s;
  s.grid = grid;
  s.slices = static_cast<int>(history.size());
  s.components = grid.dim;
  for (const auto& v : history) {
    require_same_grid(v.grid, grid.space());
    for (const auto& c : v.comp) append(s.samples, c);
  }
  return s;
}

ScalarField FieldSnapshot::scalar(int slice) const {
  if (components != 1) throw SnapshotError("snapshot does not hold a scalar field");
  if (slice < 0 || slice >= slices) throw SnapshotError("slice out of range");
  ScalarField f(grid.space());
  const std::size_t np = f.size();
  std::memcpy(f.data.data(), samples.data() + slice * np, np * sizeof(double));
  return f;
}

VectorField FieldSnapshot::vector(int slice) const {
  if (components != grid.dim) throw SnapshotError("snapshot does not hold a vector field");
  if (slice < 0 || slice >= slices) throw SnapshotError("slice out of range");
  VectorField v(grid.space());
  const std::size_t np = v.points();
  for (int c = 0; c < grid.dim; ++c) {
    std::memcpy(v.comp[c].data(), samples.data() + (slice * components + c) * np, np * sizeof(double));
  }
  return v;
}

void write_snapshot(const std::string& path, const FieldSnapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SnapshotError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<int32_t>(out, snap.grid.dim);
  put<int32_t>(out, snap.grid.n_space);
  put<int32_t>(out, snap.grid.n_time);
  put<double>(out, snap.grid.t_final);
  put<int32_t>(out, snap.slices);
  put<int32_t>(out, snap.components);
  out.write(reinterpret_cast<const char*>(snap.samples.data()),
            static_cast<std::streamsize>(snap.samples.size() * sizeof(double)));
  if (!out) throw SnapshotError("write failed for " + path);
}

FieldSnapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw SnapshotError(path + " is not a field snapshot");
  }
  FieldSnapshot s;
  s.grid.dim = get<int32_t>(in);
  s.grid.n_space = get<int32_t>(in);
  s.grid.n_time = get<int32_t>(in);
  s.grid.t_final = get<double>(in);
  s.slices = get<int32_t>(in);
  s.components = get<int32_t>(in);
  try {
    s.grid.validate();
  } catch (const Error& e) {
    throw SnapshotError(std::string("bad grid header: ") + e.what());
  }
  if (s.slices < 1 || s.components < 1) throw SnapshotError("bad slice/component count");
  const std::size_t count =
      static_cast<std::size_t>(s.slices) * s.components * s.grid.space().points();
  s.samples.resize(count);
  in.read(reinterpret_cast<char*>(s.samples.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw SnapshotError("truncated sample block in " + path);
  return s;
}

}  // namespace wildgas
