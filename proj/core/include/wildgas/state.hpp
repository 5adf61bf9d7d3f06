#pragma once

#include <vector>

#include "wildgas/grid.hpp"

namespace wildgas {

/// A velocity field that can be evaluated at any time in [0, T].
class VelocityHistory {
 public:
  virtual ~VelocityHistory() = default;
  virtual const SpaceGrid& space() const = 0;
  virtual VectorField velocity(double t) const = 0;
  /// Upper bound for sup_t max_x |v(t,x)|.
  virtual double speed_bound() const = 0;
  /// Shortest time scale on which v varies; the heat solver resolves it.
  virtual double time_scale() const = 0;
};

/// Piecewise-linear interpolation of samples on the uniform time grid.
class SampledVelocity final : public VelocityHistory {
 public:
  SampledVelocity(const GridSpec& grid, std::vector<VectorField> samples);
  /// Time-independent field.
  SampledVelocity(const GridSpec& grid, const VectorField& constant);

  const SpaceGrid& space() const override { return space_; }
  VectorField velocity(double t) const override;
  double speed_bound() const override { return bound_; }
  double time_scale() const override { return grid_.dt(); }

 private:
  GridSpec grid_;
  SpaceGrid space_;
  std::vector<VectorField> samples_;
  double bound_ = 0.0;
};

/// C-infinity bump supported in (t1, t2), u mapping (t1, t2) onto (-1, 1).
/// With flat = 0 it is exp(1 - 1/(1 - u^2)), peak value 1 at the midpoint.
/// With flat in (0, 1) it equals 1 on |u| <= flat and falls off through the
/// smooth step f(1-s) / (f(1-s) + f(s)), f(x) = exp(-1/x), s = (|u| - flat) / (1 - flat).
/// Identically zero (bit-exact) outside the open interval.
struct TimeWindow {
  double t1 = 0.0;
  double t2 = 1.0;
  double flat = 0.0;

  double value(double t) const;
  double d1(double t) const;
  bool active(double t) const { return t > t1 && t < t2; }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Spatial profile sharing one time window: w(t) = eta(t) w_x, Y(t) = eta'(t) y_x,
/// with div w_x = 0 and div y_x = -w_x holding spectrally, so that
/// d_t w + div Y = 0 at every t.
struct WaveGroup {
  TimeWindow window;
  VectorField w;
  SymTensorField y;
};

/// Subsolution (v, U): time-independent base pair plus compactly supported
/// (in time) corrections. `time_offset` shifts the whole history, so that
/// evaluating at t reads the underlying state at t + time_offset.
class SubsolutionState final : public VelocityHistory {
 public:
  SubsolutionState(const VectorField& base_v, const SymTensorField& base_u);
  explicit SubsolutionState(const VectorField& base_v);

  const SpaceGrid& space() const override { return base_v_.grid; }
  VectorField velocity(double t) const override { return v(t); }
  double speed_bound() const override;
  double time_scale() const override;

  VectorField v(double t) const;
  SymTensorField U(double t) const;
  VectorField dt_v(double t) const;

  /// Adds a correction; groups with an identical window are summed.
  void add(const WaveGroup& g);
  const std::vector<WaveGroup>& groups() const { return groups_; }
  const VectorField& base_v() const { return base_v_; }
  const SymTensorField& base_u() const { return base_u_; }

  double time_offset() const { return time_offset_; }
  SubsolutionState shifted(double offset) const;

 private:
  VectorField base_v_;
  SymTensorField base_u_;
  std::vector<WaveGroup> groups_;
  std::vector<double> group_peak_;
  double time_offset_ = 0.0;
};

}  // namespace wildgas
