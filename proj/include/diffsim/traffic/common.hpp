#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace diffsim::traffic {

struct LaneChangeParams {
  double decision_interval = 2.5;  // s
  double min_clearance_gain = 10.0;  // m
  double tau = 0.1;  // s, simulation time step
  /// Moving right needs this much more clearance than moving left (m), so
  /// equal clearances resolve to the left in both twins.
  double right_bias = 1.0;

  int steps_per_decision() const { return static_cast<int>(std::lround(decision_interval / tau)); }
  void validate() const;
};

inline void LaneChangeParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(decision_interval > 0.0)) throw std::invalid_argument("lane-change interval must be positive");
  const double ratio = decision_interval / tau;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("lane-change interval must be a multiple of the time step");
  }
}

inline double kmh_to_ms(double kmh) { return kmh / 3.6; }

/// Offsets (one per intersection, seconds) of signals that are green for the
/// first half of every cycle of length `period`.
template <class R>
struct SignalSchedule {
  std::vector<R> offsets;
  double period = 10.0;
};

struct TrajectoryRow {
  std::int64_t step;
  std::int64_t vehicle_id;
  std::int64_t road;
  double lane;
  double position;
  double velocity;
};

/// CSV with header `step,vehicle_id,road,lane,position,velocity`.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);

}  // namespace diffsim::traffic
