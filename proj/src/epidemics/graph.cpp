#include "diffsim/epidemics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "diffsim/prn.hpp"

namespace diffsim::epidemics {

namespace {

constexpr int kBisectionSteps = 60;

struct Point {
  double x;
  double y;
};

double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw std::invalid_argument("graph file: expected '" + word + "'");
}

}  // namespace

std::size_t ContactGraph::edges() const {
  std::size_t twice = 0;
  for (const auto& nbrs : adjacency) twice += nbrs.size();
  return twice / 2;
}

double ContactGraph::average_degree() const {
  return adjacency.empty() ? 0.0 : 2.0 * static_cast<double>(edges()) / static_cast<double>(nodes());
}

void ContactGraph::validate() const {
  if (adjacency.empty()) throw std::invalid_argument("graph has no nodes");
  if (coefficients.size() != adjacency.size()) {
    throw std::invalid_argument("graph needs one coefficient per node");
  }
  for (std::size_t a = 0; a < adjacency.size(); ++a) {
    if (adjacency[a].empty()) throw std::invalid_argument("graph node " + std::to_string(a) + " is isolated");
    for (std::uint32_t b : adjacency[a]) {
      if (b >= adjacency.size() || b == a) throw std::invalid_argument("graph has an invalid edge");
      const auto& back = adjacency[b];
      if (std::find(back.begin(), back.end(), a) == back.end()) {
        throw std::invalid_argument("graph adjacency is not symmetric");
      }
    }
  }
}

ContactGraph random_geometric_graph(std::size_t n, double target_degree, std::uint64_t seed,
                                    double coefficient) {
  if (n < 2) throw std::invalid_argument("random geometric graph needs at least two nodes");
  if (!(target_degree > 0.0)) throw std::invalid_argument("target degree must be positive");

  const prn::KeyedStream stream(seed, prn::Stream::Graph);
  std::vector<Point> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    points[i] = {stream.uniform(id, 0), stream.uniform(id, 1)};
  }

  // All pairwise squared distances, sorted, give the degree of any radius.
  std::vector<double> pair_d2;
  pair_d2.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) pair_d2.push_back(squared_distance(points[a], points[b]));
  }
  std::sort(pair_d2.begin(), pair_d2.end());
  auto degree_at = [&](double r) {
    const auto links = std::upper_bound(pair_d2.begin(), pair_d2.end(), r * r) - pair_d2.begin();
    return 2.0 * static_cast<double>(links) / static_cast<double>(n);
  };
  double lo = 0.0;
  double hi = std::sqrt(2.0);
  for (int i = 0; i < kBisectionSteps; ++i) {
    const double mid = 0.5 * (lo + hi);
    (degree_at(mid) < target_degree ? lo : hi) = mid;
  }
  const double r2 = hi * hi;

  ContactGraph graph;
  graph.adjacency.resize(n);
  graph.coefficients.assign(n, coefficient);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (squared_distance(points[a], points[b]) <= r2) {
        graph.adjacency[a].push_back(static_cast<std::uint32_t>(b));
        graph.adjacency[b].push_back(static_cast<std::uint32_t>(a));
      }
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (!graph.adjacency[a].empty()) continue;
    std::size_t nearest = a;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      const double d2 = squared_distance(points[a], points[b]);
      if (d2 < best) {
        best = d2;
        nearest = b;
      }
    }
    graph.adjacency[a].push_back(static_cast<std::uint32_t>(nearest));
    graph.adjacency[nearest].push_back(static_cast<std::uint32_t>(a));
  }
  for (auto& nbrs : graph.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return graph;
}

void write_graph(std::ostream& out, const ContactGraph& graph) {
  out << "nodes " << graph.nodes() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < graph.nodes(); ++i) out << i << ' ' << graph.coefficients[i] << '\n';
  out << "edges " << graph.edges() << '\n';
  for (std::size_t a = 0; a < graph.nodes(); ++a) {
    for (std::uint32_t b : graph.adjacency[a]) {
      if (a < b) out << a << ' ' << b << '\n';
    }
  }
}

ContactGraph read_graph(std::istream& in) {
  std::size_t n = 0;
  expect_word(in, "nodes");
  if (!(in >> n) || n == 0) throw std::invalid_argument("graph file: bad node count");
  ContactGraph graph;
  graph.adjacency.resize(n);
  graph.coefficients.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t id = 0;
    double c = 0.0;
    if (!(in >> id >> c) || id != i) throw std::invalid_argument("graph file: bad node line");
    graph.coefficients[i] = c;
  }
  std::size_t m = 0;
  expect_word(in, "edges");
  if (!(in >> m)) throw std::invalid_argument("graph file: bad edge count");
  for (std::size_t e = 0; e < m; ++e) {
    std::size_t a = 0, b = 0;
    if (!(in >> a >> b) || a >= n || b >= n) throw std::invalid_argument("graph file: bad edge line");
    graph.adjacency[a].push_back(static_cast<std::uint32_t>(b));
    graph.adjacency[b].push_back(static_cast<std::uint32_t>(a));
  }
  for (auto& nbrs : graph.adjacency) std::sort(nbrs.begin(), nbrs.end());
  graph.validate();
  return graph;
}

}  // namespace diffsim::epidemics
