#include "diffsim/traffic/single_road.hpp"

#include <cmath>
#include <stdexcept>

namespace diffsim::traffic {

namespace {

/// Minimum gap used when evaluating the light branch for a vehicle that is
/// at or past the stop line; that branch is masked out there anyway.
constexpr double kLightGapFloor = 0.01;

template <class Ops>
struct LeaderView {
  typename Ops::Real gap;
  typename Ops::Real velocity;
};

/// Smooth minimum of the position deltas to vehicles ahead of `self` on
/// lane `target_lane`. Masked-out vehicles are pushed beyond the free gap.
template <class Ops>
typename Ops::Real lane_gap(const SingleRoadWorld<Ops>& w, std::size_t self,
                            const typename Ops::Real& target_lane, const SingleRoadConfig& cfg,
                            const Ops& ops) {
  using R = typename Ops::Real;
  std::vector<R> candidates;
  candidates.reserve(w.position.size());
  for (std::size_t j = 0; j < w.position.size(); ++j) {
    if (j == self) continue;
    const R delta = w.position[j] - w.position[self];
    const R valid = ops.above(delta, 0.0) * ops.match(R(w.lane[j] - target_lane));
    candidates.push_back(delta + cfg.free_gap * (R(1.0) - valid));
  }
  candidates.push_back(R(cfg.free_gap));
  return ops.min(candidates);
}

template <class Ops>
LeaderView<Ops> find_leader(const SingleRoadWorld<Ops>& w, std::size_t self,
                            const SingleRoadConfig& cfg, const Ops& ops) {
  using R = typename Ops::Real;
  const R gap = lane_gap(w, self, w.lane[self], cfg, ops);

  std::vector<R> positions, lanes, velocities;
  for (std::size_t j = 0; j < w.position.size(); ++j) {
    if (j == self) continue;
    positions.push_back(w.position[j]);
    lanes.push_back(w.lane[j]);
    velocities.push_back(w.velocity[j]);
  }
  const R leader_position = w.position[self] + gap;
  R velocity(0.0);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const R mask = ops.match(R(positions[j] - leader_position)) * ops.match(R(lanes[j] - w.lane[self]));
    velocity = velocity + velocities[j] * mask;
  }
  return {gap, velocity};
}

template <class Ops>
void change_lanes(SingleRoadWorld<Ops>& w, const SingleRoadConfig& cfg, const Ops& ops) {
  using R = typename Ops::Real;
  std::vector<R> next = w.lane;
  const double top = cfg.lanes - 1;
  for (std::size_t i = 0; i < w.position.size(); ++i) {
    const R current = lane_gap(w, i, w.lane[i], cfg, ops);
    const R left_lane = w.lane[i] - 1.0;
    const R right_lane = w.lane[i] + 1.0;
    const R left_valid = ops.above(left_lane, -0.5);
    const R right_valid = ops.above(R(-right_lane), -top - 0.5);
    const R left = left_valid * lane_gap(w, i, left_lane, cfg, ops);
    const R right = right_valid * lane_gap(w, i, right_lane, cfg, ops);
    const R best = ops.max(std::vector<R>{left, right});
    const R change = ops.above(R(best - current), cfg.lane_change.min_clearance_gain);
    const R go_right = ops.above(R(right - left), cfg.lane_change.right_bias);
    next[i] = w.lane[i] + change * (2.0 * go_right - 1.0);
  }
  w.lane = std::move(next);
}

}  // namespace

int SingleRoadConfig::total_steps() const {
  return static_cast<int>(std::lround(duration / lane_change.tau));
}

void SingleRoadConfig::validate() const {
  idm.validate();
  lane_change.validate();
  smooth.validate();
  if (!(road_length > 0.0)) throw std::invalid_argument("road length must be positive");
  if (!(light_position > 0.0 && light_position < road_length)) {
    throw std::invalid_argument("light must be placed on the road");
  }
  if (!(signal_period > 0.0)) throw std::invalid_argument("signal period must be positive");
  if (lanes < 1) throw std::invalid_argument("need at least one lane");
  if (vehicles < 0) throw std::invalid_argument("vehicle count must be nonnegative");
  if (spawn_spacing * vehicles >= road_length) {
    throw std::invalid_argument("vehicles do not fit on the road");
  }
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be nonnegative");
}

template <class Ops>
SingleRoadWorld<Ops> make_single_road_world(const SingleRoadConfig& cfg) {
  using R = typename Ops::Real;
  SingleRoadWorld<Ops> w;
  for (int i = 0; i < cfg.vehicles; ++i) {
    w.position.push_back(R(cfg.spawn_spacing * (i + 1)));
    w.velocity.push_back(R(0.0));
    w.lane.push_back(R(static_cast<double>(i % cfg.lanes)));
    w.progress.push_back(R(0.0));
  }
  return w;
}

template <class Ops>
typename Ops::Real wrap_position(const typename Ops::Real& x, double road_length, const Ops& ops) {
  using R = typename Ops::Real;
  return x - road_length * ops.above(R(x - road_length), 0.0);
}

template <class Ops>
void step_single_road(SingleRoadWorld<Ops>& w, const SignalSchedule<typename Ops::Real>& schedule,
                      const SingleRoadConfig& cfg, const Ops& ops) {
  using R = typename Ops::Real;
  const double tau = cfg.lane_change.tau;
  const int decision = cfg.lane_change.steps_per_decision();
  if (w.step > 0 && w.step % decision == 0) change_lanes(w, cfg, ops);

  const R red = ops.periodic(R(w.time(cfg)) - schedule.offsets.at(0), 0.5 * schedule.period);
  const std::size_t n = w.position.size();
  std::vector<R> accel(n);
  for (std::size_t i = 0; i < n; ++i) {
    const R& v = w.velocity[i];
    const LeaderView<Ops> leader = find_leader(w, i, cfg, ops);
    const R to_light = cfg.light_position - w.position[i];
    const R braking = red * ops.above(to_light, 0.0) * ops.above(R(leader.gap - to_light), 0.0);

    const R stop = -v / tau;
    const R light_accel = idm_acceleration(v, ad::floor_at(to_light, R(kLightGapFloor)), v, cfg.idm);
    const R follow_accel = idm_acceleration(v, leader.gap, R(v - leader.velocity), cfg.idm);
    accel[i] = ops.branch(braking, ad::floor_at(light_accel, stop), ad::floor_at(follow_accel, stop));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const R v = ad::floor_at(R(w.velocity[i] + accel[i] * tau), R(0.0));
    const R moved = v * tau;
    w.velocity[i] = v;
    w.progress[i] = w.progress[i] + moved;
    w.position[i] = wrap_position(R(w.position[i] + moved), cfg.road_length, ops);
  }
  ++w.step;
}

template <class Ops>
typename Ops::Real run_single_road(const SingleRoadConfig& cfg, const typename Ops::Real& first_red,
                                   const Ops& ops, std::vector<TrajectoryRow>* trajectory) {
  using R = typename Ops::Real;
  SingleRoadWorld<Ops> w = make_single_road_world<Ops>(cfg);
  SignalSchedule<R> schedule{{first_red}, cfg.signal_period};
  const int steps = cfg.total_steps();
  for (int s = 0; s < steps; ++s) {
    step_single_road(w, schedule, cfg, ops);
    if (trajectory) {
      for (std::size_t i = 0; i < w.position.size(); ++i) {
        trajectory->push_back({w.step, static_cast<std::int64_t>(i), 0, ad::value(w.lane[i]),
                               ad::value(w.position[i]), ad::value(w.velocity[i])});
      }
    }
  }
  R total(0.0);
  for (const R& p : w.progress) total = total + p;
  return total;
}

#define DIFFSIM_INSTANTIATE(OPS)                                                              \
  template SingleRoadWorld<OPS> make_single_road_world<OPS>(const SingleRoadConfig&);         \
  template void step_single_road<OPS>(SingleRoadWorld<OPS>&,                                  \
                                      const SignalSchedule<OPS::Real>&,                       \
                                      const SingleRoadConfig&, const OPS&);                   \
  template OPS::Real run_single_road<OPS>(const SingleRoadConfig&, const OPS::Real&,          \
                                          const OPS&, std::vector<TrajectoryRow>*);           \
  template OPS::Real wrap_position<OPS>(const OPS::Real&, double, const OPS&);

DIFFSIM_INSTANTIATE(SmoothOps<Var>)
DIFFSIM_INSTANTIATE(SmoothOps<double>)
DIFFSIM_INSTANTIATE(CrispOps)

#undef DIFFSIM_INSTANTIATE

}  // namespace diffsim::traffic
