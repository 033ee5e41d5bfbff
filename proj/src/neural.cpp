#include "diffsim/neural.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <random>

namespace diffsim::neural {

NetSpec NetSpec::for_grid(std::size_t intersections, std::size_t hidden) {
  return NetSpec{kInputsPerIntersection * intersections, hidden, intersections};
}

std::size_t coefficient_count(std::size_t intersections, std::size_t hidden) {
  if (intersections < 1 || hidden < 1) {
    throw std::invalid_argument("coefficient_count: need at least one intersection and neuron");
  }
  return NetSpec::for_grid(intersections, hidden).coefficient_count();
}

std::vector<double> init_standard_normal(const NetSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> params(spec.coefficient_count());
  for (double& p : params) p = normal(rng);
  return params;
}

void write_coefficients(std::ostream& out, const NetSpec& spec, std::span<const double> params) {
  if (params.size() != spec.coefficient_count()) {
    throw std::invalid_argument("write_coefficients: coefficient count mismatch");
  }
  out << spec.n_in << '\n' << spec.n_hidden << '\n' << spec.n_out << '\n';
  out << std::setprecision(17);
  for (double p : params) out << p << '\n';
}

std::vector<double> read_coefficients(std::istream& in, NetSpec& spec) {
  if (!(in >> spec.n_in >> spec.n_hidden >> spec.n_out)) {
    throw std::runtime_error("read_coefficients: malformed header");
  }
  std::vector<double> params(spec.coefficient_count());
  for (double& p : params) {
    if (!(in >> p)) throw std::runtime_error("read_coefficients: truncated coefficient list");
  }
  return params;
}

}  // namespace diffsim::neural
