#pragma once

// Fidelity and overhead experiments shared by the CLI and the acceptance
// suite.

#include <cstdint>
#include <vector>

#include "diffsim/epidemics/graph.hpp"
#include "diffsim/harness/config.hpp"
#include "diffsim/harness/models.hpp"

namespace diffsim::harness {

struct FidelitySample {
  int sample = 0;
  int run = 0;
  std::uint64_t seed = 0;
  /// SIR: fraction of agents attributed differently at the end of the run.
  /// Traffic: |f_diff - f_ref| / max(|f_ref|, 1).
  double deviation = 0.0;
};

struct FidelityReport {
  std::vector<FidelitySample> runs;
  /// Mean deviation of each parametrization over its runs.
  std::vector<double> deviations;
  double median = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
  double bin_width = 0.0;
  std::vector<std::size_t> histogram;
};

/// Quantiles and an equal-width histogram on [0, max] of `deviations`.
FidelityReport summarize_deviations(std::vector<double> deviations, int bins);

/// Per parametrization: initial infection probability and every location
/// coefficient from U(0, 0.1), recovery rate from U(0, 0.01). Each is run
/// `settings.runs` times with seeds shared between the smooth model (on
/// plain doubles) and the crisp twin.
FidelityReport sir_fidelity(const epidemics::SirConfig& model, const epidemics::ContactGraph& graph,
                            const FidelitySettings& settings, unsigned threads = 1);

/// Uniformly sampled parameters (initial_parameters with per-sample seeds);
/// relative objective deviation between twins.
FidelityReport model_fidelity(const SimModel& diff, const SimModel& reference, const FidelitySettings& settings);

struct BenchRow {
  int vehicles = 0;
  double diff_time_s = 0.0;  // forward + backward
  double ref_time_s = 0.0;
  double diff_mem_mib = 0.0;  // peak resident set of the measuring process
  double ref_mem_mib = 0.0;
  double time_factor = 0.0;
  double mem_factor = 0.0;
};

/// Static-offset grid of bench.width x bench.height intersections. Each
/// measurement runs in a forked child so peak memory is per measurement;
/// medians over bench.repeats.
std::vector<BenchRow> bench_grid(const traffic::GridConfig& base, const BenchSettings& bench, std::uint64_t seed);

}  // namespace diffsim::harness
