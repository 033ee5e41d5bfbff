#include "diffsim/harness/experiments.hpp"

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "diffsim/epidemics/sir.hpp"
#include "diffsim/harness/csv.hpp"
#include "diffsim/traffic/grid.hpp"

namespace diffsim::harness {

namespace {

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

struct Measurement {
  double seconds = 0.0;
  double peak_mib = 0.0;
};

/// Runs `work` in a child process; returns its wall time and peak RSS.
template <class Work>
Measurement measure_in_child(Work work) {
  int fds[2];
  if (pipe(fds) != 0) throw std::runtime_error("bench: pipe failed");
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("bench: fork failed");
  if (pid == 0) {
    close(fds[0]);
    double seconds = -1.0;
    try {
      const auto start = std::chrono::steady_clock::now();
      work();
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } catch (...) {
    }
    const ssize_t written = write(fds[1], &seconds, sizeof seconds);
    _exit(written == sizeof seconds && seconds >= 0.0 ? 0 : 1);
  }
  close(fds[1]);
  double seconds = -1.0;
  const ssize_t got = read(fds[0], &seconds, sizeof seconds);
  close(fds[0]);
  int status = 0;
  rusage usage{};
  if (wait4(pid, &status, 0, &usage) != pid || !WIFEXITED(status) || WEXITSTATUS(status) != 0 ||
      got != sizeof seconds) {
    throw std::runtime_error("bench: measurement child failed");
  }
  return {seconds, static_cast<double>(usage.ru_maxrss) / 1024.0};
}

}  // namespace

FidelityReport summarize_deviations(std::vector<double> deviations, int bins) {
  if (deviations.empty()) throw std::invalid_argument("no deviations to summarize");
  if (bins < 1) throw std::invalid_argument("need at least one histogram bin");
  FidelityReport r;
  r.median = quantile(deviations, 0.5);
  r.q95 = quantile(deviations, 0.95);
  r.q99 = quantile(deviations, 0.99);
  const double top = *std::max_element(deviations.begin(), deviations.end());
  r.bin_width = top > 0.0 ? top / bins : 1.0 / bins;
  r.histogram.assign(static_cast<std::size_t>(bins), 0);
  for (double d : deviations) {
    auto b = static_cast<std::size_t>(d / r.bin_width);
    r.histogram[std::min(b, r.histogram.size() - 1)]++;
  }
  r.deviations = std::move(deviations);
  return r;
}

FidelityReport sir_fidelity(const epidemics::SirConfig& model, const epidemics::ContactGraph& graph,
                            const FidelitySettings& settings, unsigned threads) {
  using epidemics::EpidemicInputs;
  const auto samples = static_cast<std::size_t>(settings.samples);
  const auto runs = static_cast<std::size_t>(settings.runs);

  // Inputs are drawn up front so the result does not depend on threading.
  std::mt19937_64 rng(settings.input_seed);
  std::uniform_real_distribution<double> u01(0.0, 0.1);
  std::uniform_real_distribution<double> rate(0.0, 0.01);
  std::vector<EpidemicInputs<double>> inputs(samples);
  for (auto& in : inputs) {
    in.initial_infection_prob = u01(rng);
    in.location_coefficients.resize(graph.nodes());
    for (double& c : in.location_coefficients) c = u01(rng);
    do in.recovery_rate = rate(rng); while (in.recovery_rate <= 0.0);
  }

  std::vector<FidelitySample> all(samples * runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    const SmoothOps<double> smooth_ops{model.smooth};
    const CrispOps crisp_ops{model.smooth};
    for (std::size_t job = next++; job < all.size(); job = next++) {
      const std::size_t s = job / runs;
      const std::size_t r = job % runs;
      const std::uint64_t seed = static_cast<std::uint64_t>(job) + 1;
      epidemics::SirState<double> a, b;
      epidemics::run_sir<SmoothOps<double>>(model, graph, inputs[s], seed, smooth_ops, &a);
      epidemics::run_sir<CrispOps>(model, graph, inputs[s], seed, crisp_ops, &b);
      const auto ha = epidemics::attribute(a);
      const auto hb = epidemics::attribute(b);
      all[job] = {static_cast<int>(s), static_cast<int>(r), seed, epidemics::state_mismatch(ha, hb)};
    }
  };
  const unsigned n_threads = std::max(1u, threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> per_sample(samples, 0.0);
  for (const auto& x : all) per_sample[static_cast<std::size_t>(x.sample)] += x.deviation;
  for (double& d : per_sample) d /= static_cast<double>(runs);
  FidelityReport report = summarize_deviations(std::move(per_sample), settings.bins);
  report.runs = std::move(all);
  return report;
}

FidelityReport model_fidelity(const SimModel& diff, const SimModel& reference, const FidelitySettings& settings) {
  if (diff.parameter_count() != reference.parameter_count()) {
    throw std::invalid_argument("fidelity twins disagree on parameter count");
  }
  std::vector<FidelitySample> all;
  std::vector<double> per_sample;
  for (int s = 0; s < settings.samples; ++s) {
    const std::vector<double> params = diff.initial_parameters(settings.input_seed + static_cast<std::uint64_t>(s));
    double sum = 0.0;
    for (int r = 0; r < settings.runs; ++r) {
      const std::uint64_t seed = static_cast<std::uint64_t>(s * settings.runs + r) + 1;
      const double fd = diff.run(params, seed, false).objective;
      const double fr = reference.run(params, seed, false).objective;
      const double dev = std::abs(fd - fr) / std::max(std::abs(fr), 1.0);
      all.push_back({s, r, seed, dev});
      sum += dev;
    }
    per_sample.push_back(sum / settings.runs);
  }
  FidelityReport report = summarize_deviations(std::move(per_sample), settings.bins);
  report.runs = std::move(all);
  return report;
}

std::vector<BenchRow> bench_grid(const traffic::GridConfig& base, const BenchSettings& bench, std::uint64_t seed) {
  std::vector<BenchRow> rows;
  for (int vehicles : bench.vehicle_counts) {
    traffic::GridConfig cfg = base;
    cfg.width = bench.width;
    cfg.height = bench.height;
    cfg.duration = bench.duration;
    cfg.vehicles = vehicles;
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, cfg.signal_period);
    std::vector<double> offsets(static_cast<std::size_t>(cfg.intersections()));
    for (double& o : offsets) o = u(rng);

    auto diff_run = [&] {
      Tape tape;
      std::vector<Var> x;
      for (double o : offsets) x.push_back(tape.new_input(o));
      const Var out = traffic::run_grid_static<SmoothOps<Var>>(cfg, std::span<const Var>(x), seed,
                                                               SmoothOps<Var>{cfg.smooth});
      const auto g = tape.backward(out);
      if (g.size() != offsets.size()) throw std::logic_error("bench: gradient size");
    };
    auto ref_run = [&] {
      traffic::run_grid_static<CrispOps>(cfg, std::span<const double>(offsets), seed, CrispOps{cfg.smooth});
    };

    std::vector<double> dt, rt, dm, rm;
    for (int rep = 0; rep < bench.repeats; ++rep) {
      const Measurement d = measure_in_child(diff_run);
      const Measurement r = measure_in_child(ref_run);
      dt.push_back(d.seconds);
      dm.push_back(d.peak_mib);
      rt.push_back(r.seconds);
      rm.push_back(r.peak_mib);
    }
    BenchRow row;
    row.vehicles = vehicles;
    row.diff_time_s = median(dt);
    row.ref_time_s = median(rt);
    row.diff_mem_mib = median(dm);
    row.ref_mem_mib = median(rm);
    row.time_factor = row.diff_time_s / row.ref_time_s;
    row.mem_factor = row.diff_mem_mib / row.ref_mem_mib;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace diffsim::harness
