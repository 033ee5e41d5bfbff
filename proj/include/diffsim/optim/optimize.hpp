#pragma once

// Optimization driver: budgeted loop over batches with a best-so-far trace,
// plus a step-size sweep that keeps the best run.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "diffsim/optim/batch.hpp"
#include "diffsim/optim/optimizers.hpp"

namespace diffsim::optim {

struct OptimizerSettings {
  Algorithm algorithm = Algorithm::Adam;
  double step_size = 1e-2;
  /// Batches after the initial evaluation.
  int budget_batches = 200;
  /// Wall-clock cap in seconds; 0 means none. A batch in flight when the
  /// cap expires is completed.
  double budget_seconds = 0.0;
  /// Seeds the optimizer's own random choices (proposals, populations).
  std::uint64_t seed = 1;
  double clip_bound = 10.0;
  unsigned threads = 1;
};

struct TraceRow {
  int batch = 0;
  double wall_clock_s = 0.0;
  double candidate_objective = 0.0;
  double best_objective = 0.0;
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
};

struct OptimizationResult {
  Algorithm algorithm = Algorithm::Adam;
  double step_size = 0.0;
  OptimizationTrace trace;
  std::vector<double> best_parameters;
  double best_objective = 0.0;
  std::vector<double> final_parameters;
};

/// Row 0 is the initial evaluation at `initial`; every further row is one
/// batch over `seeds` (the same seeds for every batch).
OptimizationResult optimize(const Model& model, const OptimizerSettings& settings,
                            std::span<const double> initial, std::span<const std::uint64_t> seeds);

/// Runs `optimize` once per step size and returns the run whose best
/// objective is largest (earliest step size on ties). All runs are appended
/// to `all` when given.
OptimizationResult sweep_step_sizes(const Model& model, OptimizerSettings settings,
                                    std::span<const double> step_sizes, std::span<const double> initial,
                                    std::span<const std::uint64_t> seeds,
                                    std::vector<OptimizationResult>* all = nullptr);

/// Header `batch,wall_clock_s,candidate_objective,best_objective`.
void write_trace_csv(std::ostream& out, const OptimizationTrace& trace);
/// Parses what write_trace_csv wrote; lines starting with '#' are skipped.
OptimizationTrace read_trace_csv(std::istream& in);

/// One value per line, full precision.
void write_parameters(std::ostream& out, std::span<const double> params);
std::vector<double> read_parameters(std::istream& in);

}  // namespace diffsim::optim
