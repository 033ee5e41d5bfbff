#pragma once

// Adapters exposing each simulation variant as an optim::Model. In
// differentiable mode a run that needs a gradient is recorded on a tape;
// otherwise the smooth model is evaluated on plain doubles. Reference mode
// evaluates the crisp twin and never yields gradients.

#include <iosfwd>
#include <memory>

#include "diffsim/epidemics/graph.hpp"
#include "diffsim/harness/config.hpp"
#include "diffsim/optim/batch.hpp"

namespace diffsim::harness {

class SimModel : public optim::Model {
 public:
  explicit SimModel(bool reference) : reference_(reference) {}
  bool reference() const { return reference_; }
  /// Writes the per-step trajectory CSV of one run.
  virtual void trajectory(std::span<const double> params, std::uint64_t seed, std::ostream& out) const = 0;

 protected:
  bool reference_;
};

std::unique_ptr<SimModel> make_single_road_model(const traffic::SingleRoadConfig& cfg, bool reference);
std::unique_ptr<SimModel> make_grid_static_model(const traffic::GridConfig& cfg, bool reference);
std::unique_ptr<SimModel> make_grid_nn_model(const traffic::GridConfig& cfg, std::size_t hidden, bool reference);
/// Parameters: initial infection probability, recovery rate, then one
/// infection coefficient per graph node.
std::unique_ptr<SimModel> make_sir_model(const SirSetup& setup, epidemics::ContactGraph graph, bool reference);

/// Graph from `sir.graph_file` when set, else a random geometric graph.
epidemics::ContactGraph make_graph(const ExperimentConfig& cfg);

std::unique_ptr<SimModel> make_model(const ExperimentConfig& cfg);

}  // namespace diffsim::harness
