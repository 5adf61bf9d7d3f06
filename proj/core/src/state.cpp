#include "wildgas/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wildgas/errors.hpp"

namespace wildgas {

SampledVelocity::SampledVelocity(const GridSpec& grid, std::vector<VectorField> samples)
    : grid_(grid), space_(grid.space()), samples_(std::move(samples)) {
  if (static_cast<int>(samples_.size()) != grid_.n_time) {
    throw GridMismatch("velocity history needs one sample per time level");
  }
  for (const auto& s : samples_) {
    require_same_grid(s.grid, space_);
    bound_ = std::max(bound_, max_norm(s));
  }
}

SampledVelocity::SampledVelocity(const GridSpec& grid, const VectorField& constant)
    : SampledVelocity(grid, std::vector<VectorField>(grid.n_time, constant)) {}

VectorField SampledVelocity::velocity(double t) const {
  const double s = std::clamp(t / grid_.dt(), 0.0, static_cast<double>(grid_.n_time - 1));
  const int j = std::min(static_cast<int>(s), grid_.n_time - 2);
  const double f = s - j;
  if (f == 0.0) return samples_[j];
  if (f == 1.0) return samples_[j + 1];
  VectorField r = (1.0 - f) * samples_[j];
  axpy(f, samples_[j + 1], r);
  return r;
}

namespace {

double step_f(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double step_df(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

}  // namespace

double TimeWindow::value(double t) const {
  if (!active(t)) return 0.0;
  const double u = (2.0 * t - t1 - t2) / (t2 - t1);
  if (flat <= 0.0) return std::exp(1.0 - 1.0 / (1.0 - u * u));
  const double a = std::abs(u);
  if (a <= flat) return 1.0;
  const double s = (a - flat) / (1.0 - flat);
  const double f0 = step_f(1.0 - s), f1 = step_f(s);
  return f0 / (f0 + f1);
}

double TimeWindow::d1(double t) const {
  if (!active(t)) return 0.0;
  const double u = (2.0 * t - t1 - t2) / (t2 - t1);
  if (flat <= 0.0) {
    const double q = 1.0 - u * u;
    return std::exp(1.0 - 1.0 / q) * (-2.0 * u / (q * q)) * (2.0 / (t2 - t1));
  }
  const double a = std::abs(u);
  if (a <= flat) return 0.0;
  const double s = (a - flat) / (1.0 - flat);
  const double f0 = step_f(1.0 - s), f1 = step_f(s);
  const double den = f0 + f1;
  const double ds = -(step_df(1.0 - s) * f1 + f0 * step_df(s)) / (den * den);
  return ds * (u < 0.0 ? -1.0 : 1.0) / (1.0 - flat) * (2.0 / (t2 - t1));
}

SubsolutionState::SubsolutionState(const VectorField& base_v, const SymTensorField& base_u)
    : base_v_(base_v), base_u_(base_u) {
  require_same_grid(base_v.grid, base_u.grid);
}

SubsolutionState::SubsolutionState(const VectorField& base_v)
    : SubsolutionState(base_v, SymTensorField(base_v.grid)) {}

double SubsolutionState::speed_bound() const {
  double b = max_norm(base_v_);
  for (double g : group_peak_) b += g;
  return b;
}

double SubsolutionState::time_scale() const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& g : groups_) s = std::min(s, g.window.t2 - g.window.t1);
  return s;
}

VectorField SubsolutionState::v(double t) const {
  const double tt = t + time_offset_;
  VectorField r = base_v_;
  for (const auto& g : groups_) {
    const double e = g.window.value(tt);
    if (e != 0.0) axpy(e, g.w, r);
  }
  return r;
}

SymTensorField SubsolutionState::U(double t) const {
  const double tt = t + time_offset_;
  SymTensorField r = base_u_;
  for (const auto& g : groups_) {
    const double e = g.window.d1(tt);
    if (e != 0.0) axpy(e, g.y, r);
  }
  return r;
}

VectorField SubsolutionState::dt_v(double t) const {
  const double tt = t + time_offset_;
  VectorField r(base_v_.grid);
  for (const auto& g : groups_) {
    const double e = g.window.d1(tt);
    if (e != 0.0) axpy(e, g.w, r);
  }
  return r;
}

void SubsolutionState::add(const WaveGroup& g) {
  require_same_grid(g.w.grid, base_v_.grid);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].window == g.window) {
      axpy(1.0, g.w, groups_[i].w);
      axpy(1.0, g.y, groups_[i].y);
      group_peak_[i] = max_norm(groups_[i].w);
      return;
    }
  }
  groups_.push_back(g);
  group_peak_.push_back(max_norm(g.w));
}

SubsolutionState SubsolutionState::shifted(double offset) const {
  SubsolutionState s = *this;
  s.time_offset_ += offset;
  return s;
}

}  // namespace wildgas
