#include <cstdio>
#include <ostream>

#include "diffsim/traffic/common.hpp"

namespace diffsim::traffic {

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "step,vehicle_id,road,lane,position,velocity\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(r.step),
                  static_cast<long long>(r.vehicle_id), static_cast<long long>(r.road), r.lane, r.position,
                  r.velocity);
    out << buf;
  }
}

}  // namespace diffsim::traffic
