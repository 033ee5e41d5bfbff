#pragma once

// Torus grid of signalized intersections.
//
// Vehicles live in per-lane arrays sorted by position. Leader identity, lane
// changes, turn choices and advancing onto the next road are discrete and
// decided on primal values, so they carry no sensitivity. Signal states,
// braking at red lights and longitudinal IDM motion are built from smooth
// blocks and are recorded on the tape.
//
// Road layout: intersection (x, y) has id y * width + x. Road
// 4 * intersection + d leaves that intersection heading d (0 east, 1 north,
// 2 west, 3 south) and ends at the neighbouring intersection. East/west
// roads are "horizontal". Each road end carries a light; horizontal and
// vertical approaches of an intersection are always in opposite phases.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "diffsim/neural.hpp"
#include "diffsim/ops.hpp"
#include "diffsim/prn.hpp"
#include "diffsim/traffic/common.hpp"
#include "diffsim/traffic/idm.hpp"

namespace diffsim::traffic {

enum class Turn : std::uint8_t { Left = 0, Right = 1, Straight = 2 };

enum class ProgressObjective { Sum, Min };

struct GridConfig {
  int width = 5;
  int height = 5;
  int lanes = 3;
  double road_length = 100.0;
  /// left, right, straight
  std::array<double, 3> turn_probabilities{0.05, 0.05, 0.9};
  double signal_period = 20.0;  // full cycle; each phase lasts half
  double duration = 180.0;
  int vehicles = 100;
  double min_spawn_spacing = 7.0;
  std::uint64_t placement_seed = 1;
  /// Draw initial placement from the run seed instead of placement_seed.
  bool randomize_placement = false;
  /// Neural controller: seconds each decision stays in effect.
  double decision_interval = 20.0;
  ProgressObjective objective = ProgressObjective::Sum;
  IdmParams idm{.desired_velocity = 35.0 / 3.6};
  LaneChangeParams lane_change{};
  smooth::SmoothConfig smooth{};

  int intersections() const { return width * height; }
  int roads() const { return 4 * intersections(); }
  int total_steps() const;
  void validate() const;
};

struct RoadTopology {
  int width = 0;
  int height = 0;

  int intersection(int x, int y) const;
  int neighbour(int intersection, int direction) const;
  int end_of(int road) const { return neighbour(road / 4, road % 4); }
  static bool horizontal(int road) { return road % 2 == 0; }
  /// Road taken after `turn` at the end of `road`.
  int next_road(int road, Turn turn) const;
  /// Road arriving at `intersection` while heading `direction`.
  int incoming(int intersection, int direction) const;
};

Turn draw_turn(double u, const std::array<double, 3>& probabilities);

template <class R>
struct Vehicle {
  std::uint32_t id = 0;
  int road = 0;
  int lane = 0;
  std::uint32_t arrivals = 0;
  Turn turn = Turn::Straight;
  R position{};
  R velocity{};
  R progress{};
};

template <class Ops>
class GridWorld {
 public:
  using R = typename Ops::Real;

  GridWorld(const GridConfig& cfg, const Ops& ops, std::uint64_t seed);

  /// Static control: intersection j shows green on horizontal approaches
  /// while (t + offsets[j]) mod period < period / 2.
  void step_static(std::span<const R> offsets);
  /// Neural control: at every decision point the network maps the sorted
  /// approach positions to one output per intersection; a positive output
  /// turns horizontal approaches green.
  void step_nn(const neural::NetSpec& spec, std::span<const R> params);

  /// Sum (or smooth/exact minimum) of per-vehicle progress in metres.
  R objective() const;

  /// Network inputs at the current state: per intersection, per incoming
  /// road (heading east, north, west, south), per lane, the five vehicles
  /// nearest the stop line as (l - x) / l; missing vehicles read 1.0.
  std::vector<R> controller_inputs() const;

  const std::vector<Vehicle<R>>& vehicles() const { return vehicles_; }
  const std::vector<std::vector<std::uint32_t>>& lanes() const { return lane_members_; }
  const RoadTopology& topology() const { return topo_; }
  int step() const { return step_; }
  double time() const { return step_ * cfg_.lane_change.tau; }
  std::uint64_t seed() const { return seed_; }
  /// Horizontal-green level of each intersection after the last step.
  const std::vector<R>& horizontal_green() const { return horizontal_green_; }

  void append_trajectory(std::vector<TrajectoryRow>& rows) const;

 private:
  struct Leader {
    bool exists = false;
    R gap{};
    R velocity{};
  };

  void place_vehicles(std::uint64_t placement_seed);
  void rebuild_lanes();
  void change_lanes();
  Leader leader_of(std::uint32_t vehicle) const;
  void advance();
  std::vector<std::uint32_t>& members(int road, int lane) {
    return lane_members_[static_cast<std::size_t>(road * cfg_.lanes + lane)];
  }
  const std::vector<std::uint32_t>& members(int road, int lane) const {
    return lane_members_[static_cast<std::size_t>(road * cfg_.lanes + lane)];
  }

  GridConfig cfg_;
  Ops ops_;
  std::uint64_t seed_;
  RoadTopology topo_;
  prn::KeyedStream turns_;
  std::vector<Vehicle<R>> vehicles_;
  std::vector<std::vector<std::uint32_t>> lane_members_;
  std::vector<R> horizontal_green_;
  int step_ = 0;
};

template <class Ops>
void step_grid_static(GridWorld<Ops>& world, std::span<const typename Ops::Real> offsets) {
  world.step_static(offsets);
}

template <class Ops>
void step_grid_nn(GridWorld<Ops>& world, const neural::NetSpec& spec,
                  std::span<const typename Ops::Real> params) {
  world.step_nn(spec, params);
}

/// Full run with static offsets; returns the configured progress objective.
template <class Ops>
typename Ops::Real run_grid_static(const GridConfig& cfg, std::span<const typename Ops::Real> offsets,
                                   std::uint64_t seed, const Ops& ops,
                                   std::vector<TrajectoryRow>* trajectory = nullptr);

template <class Ops>
typename Ops::Real run_grid_nn(const GridConfig& cfg, const neural::NetSpec& spec,
                               std::span<const typename Ops::Real> params, std::uint64_t seed,
                               const Ops& ops, std::vector<TrajectoryRow>* trajectory = nullptr);

}  // namespace diffsim::traffic
