#pragma once

// Batch evaluation: average objective (and clipped gradient) over runs with
// different seeds at one parameter point.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diffsim::optim {

struct RunResult {
  double objective = 0.0;
  /// Empty unless a gradient was requested.
  std::vector<double> gradient;
};

/// A simulation with a real parameter vector. run() must be safe to call
/// concurrently; every call builds its own tape.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string name() const = 0;
  virtual std::size_t parameter_count() const = 0;
  /// Typical magnitude of a meaningful parameter change; scales the
  /// perturbations of the gradient-free optimizers.
  virtual double parameter_scale() const { return 1.0; }
  /// Shared random starting point.
  virtual std::vector<double> initial_parameters(std::uint64_t seed) const = 0;
  virtual RunResult run(std::span<const double> params, std::uint64_t seed, bool needs_gradient) const = 0;
};

struct EvalResult {
  double objective = 0.0;
  std::optional<std::vector<double>> gradient;
  /// Objective of every run, in the order of the seed list.
  std::vector<double> per_run;
};

struct BatchOptions {
  bool needs_gradient = false;
  double clip_bound = 10.0;
  unsigned threads = 1;
};

/// Componentwise clamp to [-bound, bound].
std::vector<double> clip_gradient(std::span<const double> g, double bound = 10.0);

/// Runs every seed (in parallel when threads > 1), clips each run's gradient
/// and averages. Results are merged in ascending (seed, position) order, so
/// they do not depend on thread scheduling or on the order of the seed list.
EvalResult batch_evaluate(const Model& model, std::span<const double> params,
                          std::span<const std::uint64_t> seeds, const BatchOptions& options);

}  // namespace diffsim::optim
