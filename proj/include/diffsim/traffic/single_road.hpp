#pragma once

// Fully differentiable multi-lane ring road with one traffic light.
//
// Every vehicle finds its leader by scanning all other vehicles: the leader
// gap is the (smooth) minimum over position deltas masked by "ahead" and
// "same lane", and the leader's velocity is retrieved by select-by-attribute
// on (position, lane). Lanes are real-valued so lane changes are
// differentiable too. Instantiated with CrispOps the same code is the exact
// discrete reference model.

#include <vector>

#include "diffsim/ops.hpp"
#include "diffsim/traffic/common.hpp"
#include "diffsim/traffic/idm.hpp"

namespace diffsim::traffic {

struct SingleRoadConfig {
  double road_length = 250.0;
  double light_position = 100.0;
  double signal_period = 10.0;  // full red + green cycle
  int lanes = 3;
  int vehicles = 2;
  double spawn_spacing = 40.0;
  double duration = 10.0;
  /// Gap reported when no leader exists.
  double free_gap = 1.0e4;
  IdmParams idm{};
  LaneChangeParams lane_change{};
  smooth::SmoothConfig smooth{};

  int total_steps() const;
  void validate() const;
};

template <class Ops>
struct SingleRoadWorld {
  using R = typename Ops::Real;
  std::vector<R> position;
  std::vector<R> velocity;
  std::vector<R> lane;
  std::vector<R> progress;
  int step = 0;

  double time(const SingleRoadConfig& cfg) const { return step * cfg.lane_change.tau; }
};

/// Vehicle i starts at rest at spawn_spacing * (i + 1) on lane i mod lanes.
template <class Ops>
SingleRoadWorld<Ops> make_single_road_world(const SingleRoadConfig& cfg);

/// One time step. `schedule.offsets[0]` is the time at which the light first
/// turns red; red and green phases each last half of `schedule.period`.
template <class Ops>
void step_single_road(SingleRoadWorld<Ops>& world,
                      const SignalSchedule<typename Ops::Real>& schedule,
                      const SingleRoadConfig& cfg, const Ops& ops);

/// Runs `cfg.duration` seconds and returns the summed vehicle progress (m).
template <class Ops>
typename Ops::Real run_single_road(const SingleRoadConfig& cfg, const typename Ops::Real& first_red,
                                   const Ops& ops, std::vector<TrajectoryRow>* trajectory = nullptr);

/// Position after the smooth wrap at the road end.
template <class Ops>
typename Ops::Real wrap_position(const typename Ops::Real& x, double road_length, const Ops& ops);

}  // namespace diffsim::traffic
