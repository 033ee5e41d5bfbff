#pragma once

// Static location graph for the epidemic model.

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace diffsim::epidemics {

struct ContactGraph {
  std::vector<std::vector<std::uint32_t>> adjacency;
  /// Default per-node infection coefficients; models take the live values
  /// from EpidemicInputs so they can be differentiated.
  std::vector<double> coefficients;

  std::size_t nodes() const { return adjacency.size(); }
  std::size_t edges() const;
  double average_degree() const;
  /// Throws std::invalid_argument on asymmetric or out-of-range adjacency,
  /// self loops, or isolated nodes.
  void validate() const;
};

/// n points uniform in the unit square, linked when closer than a radius
/// found by bisection so the average degree approaches `target_degree`.
/// Isolated nodes are linked to their nearest neighbour. Coefficients are
/// set to `coefficient`.
ContactGraph random_geometric_graph(std::size_t n, double target_degree, std::uint64_t seed,
                                    double coefficient = 0.0);

/// Text format:
///   nodes <n>
///   <node> <coefficient>      (n lines)
///   edges <m>
///   <a> <b>                   (m lines, a < b)
void write_graph(std::ostream& out, const ContactGraph& graph);
ContactGraph read_graph(std::istream& in);

}  // namespace diffsim::epidemics
