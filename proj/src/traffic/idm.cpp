#include "diffsim/traffic/idm.hpp"

#include <string>

namespace diffsim::traffic {

GapError::GapError(double gap)
    : std::runtime_error("nonpositive gap to leader: " + std::to_string(gap)) {}

void IdmParams::validate() const {
  if (!(max_accel > 0 && max_decel > 0 && desired_velocity > 0 && min_gap > 0 && headway > 0 &&
        delta > 0)) {
    throw std::invalid_argument("IDM parameters must all be positive");
  }
}

}  // namespace diffsim::traffic
