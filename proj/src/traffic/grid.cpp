#include "diffsim/traffic/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace diffsim::traffic {

namespace {

constexpr double kLightGapFloor = 0.01;
constexpr int kPlacementAttempts = 10000;
constexpr std::size_t kNearestVehicles = 5;

}  // namespace

int GridConfig::total_steps() const {
  return static_cast<int>(std::lround(duration / lane_change.tau));
}

void GridConfig::validate() const {
  idm.validate();
  lane_change.validate();
  smooth.validate();
  if (width < 1 || height < 1) throw std::invalid_argument("grid needs at least one intersection");
  if (lanes < 1) throw std::invalid_argument("need at least one lane");
  if (!(road_length > 0.0)) throw std::invalid_argument("road length must be positive");
  double sum = 0.0;
  for (double p : turn_probabilities) {
    if (p < 0.0) throw std::invalid_argument("turn probabilities must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("turn probabilities must sum to 1");
  if (!(signal_period > 0.0)) throw std::invalid_argument("signal period must be positive");
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be nonnegative");
  if (vehicles < 0) throw std::invalid_argument("vehicle count must be nonnegative");
  if (!(min_spawn_spacing > 0.0 && min_spawn_spacing < road_length)) {
    throw std::invalid_argument("spawn spacing must lie in (0, road_length)");
  }
  if (!(decision_interval > 0.0)) throw std::invalid_argument("decision interval must be positive");
}

int RoadTopology::intersection(int x, int y) const {
  x = ((x % width) + width) % width;
  y = ((y % height) + height) % height;
  return y * width + x;
}

int RoadTopology::neighbour(int id, int direction) const {
  const int x = id % width;
  const int y = id / width;
  switch (direction) {
    case 0: return intersection(x + 1, y);
    case 1: return intersection(x, y + 1);
    case 2: return intersection(x - 1, y);
    default: return intersection(x, y - 1);
  }
}

int RoadTopology::next_road(int road, Turn turn) const {
  const int heading = road % 4;
  int next = heading;
  if (turn == Turn::Left) next = (heading + 1) % 4;
  if (turn == Turn::Right) next = (heading + 3) % 4;
  return 4 * end_of(road) + next;
}

int RoadTopology::incoming(int id, int direction) const {
  return 4 * neighbour(id, (direction + 2) % 4) + direction;
}

Turn draw_turn(double u, const std::array<double, 3>& p) {
  if (u < p[0]) return Turn::Left;
  if (u < p[0] + p[1]) return Turn::Right;
  return Turn::Straight;
}

template <class Ops>
GridWorld<Ops>::GridWorld(const GridConfig& cfg, const Ops& ops, std::uint64_t seed)
    : cfg_(cfg),
      ops_(ops),
      seed_(seed),
      topo_{cfg.width, cfg.height},
      turns_(seed, prn::Stream::Turn),
      lane_members_(static_cast<std::size_t>(cfg.roads() * cfg.lanes)),
      horizontal_green_(static_cast<std::size_t>(cfg.intersections()), R(1.0)) {
  cfg_.validate();
  place_vehicles(cfg.randomize_placement ? seed : cfg.placement_seed);
  rebuild_lanes();
}

template <class Ops>
void GridWorld<Ops>::place_vehicles(std::uint64_t placement_seed) {
  const prn::KeyedStream stream(placement_seed, prn::Stream::Placement);
  const double usable = cfg_.road_length - cfg_.min_spawn_spacing;
  for (int v = 0; v < cfg_.vehicles; ++v) {
    const auto id = static_cast<std::uint32_t>(v);
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const auto a = static_cast<std::uint32_t>(attempt);
      const std::uint64_t bits = stream.bits(id, a, 0);
      const int road = static_cast<int>(bits % static_cast<std::uint64_t>(cfg_.roads()));
      const int lane = static_cast<int>((bits >> 32) % static_cast<std::uint64_t>(cfg_.lanes));
      const double position = stream.uniform(id, a, 1) * usable;
      const auto& occupied = members(road, lane);
      const bool clear = std::all_of(occupied.begin(), occupied.end(), [&](std::uint32_t other) {
        return std::abs(ad::value(vehicles_[other].position) - position) >= cfg_.min_spawn_spacing;
      });
      if (!clear) continue;
      Vehicle<R> veh;
      veh.id = id;
      veh.road = road;
      veh.lane = lane;
      veh.turn = draw_turn(turns_.uniform(id, 0), cfg_.turn_probabilities);
      veh.position = R(position);
      veh.velocity = R(0.0);
      veh.progress = R(0.0);
      vehicles_.push_back(veh);
      members(road, lane).push_back(id);
      placed = true;
    }
    if (!placed) throw std::invalid_argument("could not place all vehicles; network too dense");
  }
}

template <class Ops>
void GridWorld<Ops>::rebuild_lanes() {
  for (auto& lane : lane_members_) lane.clear();
  for (const auto& veh : vehicles_) members(veh.road, veh.lane).push_back(veh.id);
  for (auto& lane : lane_members_) {
    if (lane.size() < 2) continue;
    std::sort(lane.begin(), lane.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double pa = ad::value(vehicles_[a].position);
      const double pb = ad::value(vehicles_[b].position);
      return pa < pb || (pa == pb && a < b);
    });
  }
}

template <class Ops>
typename GridWorld<Ops>::Leader GridWorld<Ops>::leader_of(std::uint32_t i) const {
  const Vehicle<R>& veh = vehicles_[i];
  const auto& lane = members(veh.road, veh.lane);
  const auto slot = std::find(lane.begin(), lane.end(), i);
  if (slot + 1 != lane.end()) {
    const Vehicle<R>& lead = vehicles_[*(slot + 1)];
    return {true, R(lead.position - veh.position), lead.velocity};
  }
  const auto& next = members(topo_.next_road(veh.road, veh.turn), veh.lane);
  if (!next.empty() && next.front() != i) {
    const Vehicle<R>& lead = vehicles_[next.front()];
    return {true, R((cfg_.road_length - veh.position) + lead.position), lead.velocity};
  }
  return {};
}

template <class Ops>
void GridWorld<Ops>::change_lanes() {
  const double l = cfg_.road_length;
  const double inf = std::numeric_limits<double>::infinity();
  // Front clearance and back gap of a vehicle at `x` on a lane's sorted list.
  auto gaps = [&](const std::vector<std::uint32_t>& lane, std::uint32_t self, double x) {
    double front = (l - x) + l;
    double back = inf;
    for (std::uint32_t other : lane) {
      if (other == self) continue;
      const double p = ad::value(vehicles_[other].position);
      if (p > x) {
        front = std::min(front, p - x);
      } else {
        back = std::min(back, x - p);
      }
    }
    return std::pair{front, back};
  };

  std::vector<int> target(vehicles_.size());
  for (const auto& veh : vehicles_) {
    const double x = ad::value(veh.position);
    const double current = gaps(members(veh.road, veh.lane), veh.id, x).first;
    double left = -inf;
    double right = -inf;
    if (veh.lane > 0) {
      const auto [front, back] = gaps(members(veh.road, veh.lane - 1), veh.id, x);
      if (back >= cfg_.idm.min_gap) left = front;
    }
    if (veh.lane + 1 < cfg_.lanes) {
      const auto [front, back] = gaps(members(veh.road, veh.lane + 1), veh.id, x);
      if (back >= cfg_.idm.min_gap) right = front;
    }
    const bool go_right = right >= left + cfg_.lane_change.right_bias;
    const double best = go_right ? right : left;
    target[veh.id] = veh.lane;
    if (best - current >= cfg_.lane_change.min_clearance_gain) {
      target[veh.id] = veh.lane + (go_right ? 1 : -1);
    }
  }
  for (auto& veh : vehicles_) veh.lane = target[veh.id];
  rebuild_lanes();
}

template <class Ops>
void GridWorld<Ops>::advance() {
  const double tau = cfg_.lane_change.tau;
  const double l = cfg_.road_length;
  if (step_ > 0 && step_ % cfg_.lane_change.steps_per_decision() == 0) change_lanes();

  std::vector<R> accel(vehicles_.size());
  for (const auto& veh : vehicles_) {
    const R& v = veh.velocity;
    const Leader leader = leader_of(veh.id);
    const R& horizontal = horizontal_green_[static_cast<std::size_t>(topo_.end_of(veh.road))];
    const R red = RoadTopology::horizontal(veh.road) ? R(1.0 - horizontal) : horizontal;
    const R to_light = l - veh.position;
    const R braking = leader.exists ? R(red * ops_.above(R(leader.gap - to_light), 0.0)) : red;

    const R stop = -v / tau;
    const R light_accel = idm_acceleration(v, ad::floor_at(to_light, R(kLightGapFloor)), v, cfg_.idm);
    const R follow_accel = leader.exists
                               ? idm_acceleration(v, leader.gap, R(v - leader.velocity), cfg_.idm)
                               : free_road_acceleration(v, cfg_.idm);
    accel[veh.id] =
        ops_.branch(braking, ad::floor_at(light_accel, stop), ad::floor_at(follow_accel, stop));
  }

  for (auto& veh : vehicles_) {
    const R v = ad::floor_at(R(veh.velocity + accel[veh.id] * tau), R(0.0));
    const R moved = v * tau;
    veh.velocity = v;
    veh.progress = veh.progress + moved;
    veh.position = veh.position + moved;
    if (ad::value(veh.position) >= l) {
      veh.position = veh.position - l;
      veh.road = topo_.next_road(veh.road, veh.turn);
      ++veh.arrivals;
      veh.turn = draw_turn(turns_.uniform(veh.id, veh.arrivals), cfg_.turn_probabilities);
    }
  }
  rebuild_lanes();
  ++step_;
}

template <class Ops>
void GridWorld<Ops>::step_static(std::span<const R> offsets) {
  if (offsets.size() != static_cast<std::size_t>(cfg_.intersections())) {
    throw std::invalid_argument("need one signal offset per intersection");
  }
  // Only lights that some vehicle is approaching are evaluated.
  std::vector<char> needed(horizontal_green_.size(), 0);
  for (const auto& veh : vehicles_) needed[static_cast<std::size_t>(topo_.end_of(veh.road))] = 1;
  const R now(time());
  for (std::size_t j = 0; j < needed.size(); ++j) {
    if (needed[j]) horizontal_green_[j] = ops_.periodic(R(now + offsets[j]), 0.5 * cfg_.signal_period);
  }
  advance();
}

template <class Ops>
std::vector<typename Ops::Real> GridWorld<Ops>::controller_inputs() const {
  const double l = cfg_.road_length;
  std::vector<R> inputs;
  inputs.reserve(neural::kInputsPerIntersection * static_cast<std::size_t>(cfg_.intersections()));
  for (int j = 0; j < cfg_.intersections(); ++j) {
    for (int heading = 0; heading < 4; ++heading) {
      const int road = topo_.incoming(j, heading);
      for (int lane = 0; lane < cfg_.lanes; ++lane) {
        const auto& members_on_lane = members(road, lane);
        std::size_t taken = 0;
        for (auto it = members_on_lane.rbegin();
             it != members_on_lane.rend() && taken < kNearestVehicles; ++it, ++taken) {
          inputs.push_back((l - vehicles_[*it].position) / l);
        }
        for (; taken < kNearestVehicles; ++taken) inputs.push_back(R(1.0));
      }
    }
  }
  return inputs;
}

template <class Ops>
void GridWorld<Ops>::step_nn(const neural::NetSpec& spec, std::span<const R> params) {
  if (spec.n_out != static_cast<std::size_t>(cfg_.intersections()) ||
      spec.n_in != neural::kInputsPerIntersection * spec.n_out || cfg_.lanes != 3) {
    throw std::invalid_argument("network shape does not match the grid");
  }
  const int decision_steps =
      std::max(1, static_cast<int>(std::lround(cfg_.decision_interval / cfg_.lane_change.tau)));
  if (step_ % decision_steps == 0) {
    const std::vector<R> inputs = controller_inputs();
    const std::vector<R> out = neural::forward<R>(spec, params, inputs);
    for (std::size_t j = 0; j < out.size(); ++j) horizontal_green_[j] = ops_.above(out[j], 0.0);
  }
  advance();
}

template <class Ops>
typename Ops::Real GridWorld<Ops>::objective() const {
  std::vector<R> progress;
  progress.reserve(vehicles_.size());
  for (const auto& veh : vehicles_) progress.push_back(veh.progress);
  if (progress.empty()) return R(0.0);
  if (cfg_.objective == ProgressObjective::Min) return ops_.min(progress);
  R sum(0.0);
  for (const R& p : progress) sum = sum + p;
  return sum;
}

template <class Ops>
void GridWorld<Ops>::append_trajectory(std::vector<TrajectoryRow>& rows) const {
  for (const auto& veh : vehicles_) {
    rows.push_back({step_, veh.id, veh.road, static_cast<double>(veh.lane), ad::value(veh.position),
                    ad::value(veh.velocity)});
  }
}

template <class Ops>
typename Ops::Real run_grid_static(const GridConfig& cfg, std::span<const typename Ops::Real> offsets,
                                   std::uint64_t seed, const Ops& ops,
                                   std::vector<TrajectoryRow>* trajectory) {
  GridWorld<Ops> world(cfg, ops, seed);
  const int steps = cfg.total_steps();
  for (int s = 0; s < steps; ++s) {
    world.step_static(offsets);
    if (trajectory) world.append_trajectory(*trajectory);
  }
  return world.objective();
}

template <class Ops>
typename Ops::Real run_grid_nn(const GridConfig& cfg, const neural::NetSpec& spec,
                               std::span<const typename Ops::Real> params, std::uint64_t seed,
                               const Ops& ops, std::vector<TrajectoryRow>* trajectory) {
  GridWorld<Ops> world(cfg, ops, seed);
  const int steps = cfg.total_steps();
  for (int s = 0; s < steps; ++s) {
    world.step_nn(spec, params);
    if (trajectory) world.append_trajectory(*trajectory);
  }
  return world.objective();
}

#define DIFFSIM_INSTANTIATE(OPS)                                                                \
  template class GridWorld<OPS>;                                                                \
  template OPS::Real run_grid_static<OPS>(const GridConfig&, std::span<const OPS::Real>,        \
                                          std::uint64_t, const OPS&,                            \
                                          std::vector<TrajectoryRow>*);                         \
  template OPS::Real run_grid_nn<OPS>(const GridConfig&, const neural::NetSpec&,                \
                                      std::span<const OPS::Real>, std::uint64_t, const OPS&,    \
                                      std::vector<TrajectoryRow>*);

DIFFSIM_INSTANTIATE(SmoothOps<Var>)
DIFFSIM_INSTANTIATE(SmoothOps<double>)
DIFFSIM_INSTANTIATE(CrispOps)

#undef DIFFSIM_INSTANTIATE

}  // namespace diffsim::traffic
