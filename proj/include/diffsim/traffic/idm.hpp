#pragma once

#include <cmath>
#include <stdexcept>

#include "diffsim/ad.hpp"

namespace diffsim::traffic {

/// Raised when a follower would have to evaluate IDM at a nonpositive gap.
class GapError : public std::runtime_error {
 public:
  explicit GapError(double gap);
};

struct IdmParams {
  double max_accel = 2.0;  // m/s^2
  double max_decel = 2.0;  // m/s^2
  double desired_velocity = 50.0 / 3.6;
  double min_gap = 2.0;  // m
  double headway = 1.0;  // s
  double delta = 4.0;

  void validate() const;
};

/// a0 (1 - (v / v_d)^delta - ((s0 + v T + v dv / (2 sqrt(a0 b0))) / gap)^2)
template <class R>
R idm_acceleration(const R& v, const R& gap, const R& dv, const IdmParams& p) {
  if (!(ad::value(gap) > 0.0)) throw GapError(ad::value(gap));
  using std::pow;
  const double interaction = 2.0 * std::sqrt(p.max_accel * p.max_decel);
  const R desired_gap = R(p.min_gap) + v * p.headway + v * dv / interaction;
  const R ratio = desired_gap / gap;
  return p.max_accel * (R(1.0) - pow(R(v / p.desired_velocity), p.delta) - ratio * ratio);
}

/// IDM without a leader.
template <class R>
R free_road_acceleration(const R& v, const IdmParams& p) {
  using std::pow;
  return p.max_accel * (R(1.0) - pow(R(v / p.desired_velocity), p.delta));
}

}  // namespace diffsim::traffic
