#include "diffsim/harness/commands.hpp"

#include <fstream>
#include <functional>
#include <ostream>

#include "diffsim/harness/config.hpp"
#include "diffsim/harness/csv.hpp"
#include "diffsim/harness/experiments.hpp"
#include "diffsim/harness/models.hpp"
#include "diffsim/optim/optimize.hpp"

namespace diffsim::harness {

namespace {

/// Failure after the config was accepted.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Setup {
  ExperimentConfig cfg;
  std::unique_ptr<SimModel> model;
  std::vector<double> params;
  std::string comment;
};

Setup load(const CommandOptions& opts, bool build_model = true) {
  Setup s;
  const Config raw = Config::load(opts.config);
  s.cfg = build_experiment(raw, opts.config.parent_path());
  for (auto& seed : s.cfg.seeds) seed += opts.seed_offset;
  s.cfg.optimizer.threads = std::max(1u, opts.threads);
  s.comment = provenance_comment(s.cfg.hash, s.cfg.seeds);
  if (!build_model) return s;
  try {
    s.model = make_model(s.cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!s.cfg.params_file.empty()) {
    std::filesystem::path path = s.cfg.params_file;
    if (path.is_relative()) path = s.cfg.base_dir / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open parameter file '" + path.string() + "'");
    try {
      s.params = optim::read_parameters(in);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (s.params.size() != s.model->parameter_count()) {
      throw ConfigError("parameter file has " + std::to_string(s.params.size()) + " values, model needs " +
                        std::to_string(s.model->parameter_count()));
    }
  } else {
    s.params = s.model->initial_parameters(s.cfg.init_seed);
  }
  std::filesystem::create_directories(opts.out);
  return s;
}

std::ofstream open_out(const CommandOptions& opts, const std::string& name) {
  std::ofstream out(opts.out / name);
  if (!out) throw RuntimeFailure("cannot write '" + (opts.out / name).string() + "'");
  return out;
}

}  // namespace

int cmd_simulate(const CommandOptions& opts, std::ostream& log) {
  Setup s = load(opts);
  const bool gradient = !s.cfg.reference;
  optim::BatchOptions batch;
  batch.needs_gradient = gradient;
  batch.clip_bound = s.cfg.optimizer.clip_bound;
  batch.threads = s.cfg.optimizer.threads;
  const optim::EvalResult r = optim::batch_evaluate(*s.model, s.params, s.cfg.seeds, batch);

  NumericTable runs{{"seed", "objective"}, {}};
  for (std::size_t i = 0; i < s.cfg.seeds.size(); ++i) {
    runs.rows.push_back({static_cast<double>(s.cfg.seeds[i]), r.per_run[i]});
  }
  auto runs_out = open_out(opts, "runs.csv");
  write_numeric_csv(runs_out, runs, s.comment);

  NumericTable summary{{"objective"}, {{r.objective}}};
  if (r.gradient) {
    for (std::size_t i = 0; i < r.gradient->size(); ++i) {
      summary.header.push_back("gradient_" + std::to_string(i));
      summary.rows[0].push_back((*r.gradient)[i]);
    }
  }
  auto summary_out = open_out(opts, "simulate.csv");
  write_numeric_csv(summary_out, summary, s.comment);

  if (s.cfg.trajectory) {
    auto traj = open_out(opts, "trajectory.csv");
    traj << s.comment << '\n';
    s.model->trajectory(s.params, s.cfg.seeds.front(), traj);
  }
  log << s.model->name() << (s.cfg.reference ? " reference" : " differentiable") << ": mean objective "
      << format_double(r.objective) << " over " << s.cfg.seeds.size() << " run(s)\n";
  return kExitOk;
}

int cmd_optimize(const CommandOptions& opts, std::ostream& log) {
  Setup s = load(opts);
  if (s.cfg.reference && optim::uses_gradient(s.cfg.optimizer.algorithm)) {
    throw ConfigError("gradient-based optimizers need mode = diff");
  }
  std::vector<double> steps = s.cfg.step_sizes;
  if (steps.empty()) steps.push_back(s.cfg.optimizer.step_size);
  std::vector<optim::OptimizationResult> all;
  const optim::OptimizationResult best =
      optim::sweep_step_sizes(*s.model, s.cfg.optimizer, steps, s.params, s.cfg.seeds, &all);

  auto trace_out = open_out(opts, "trace.csv");
  trace_out << s.comment << '\n';
  optim::write_trace_csv(trace_out, best.trace);
  NumericTable sweep{{"step_size", "initial_objective", "best_objective"}, {}};
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto out = open_out(opts, "trace_step" + std::to_string(i) + ".csv");
    out << s.comment << '\n';
    optim::write_trace_csv(out, all[i].trace);
    sweep.rows.push_back({all[i].step_size, all[i].trace.rows.front().candidate_objective, all[i].best_objective});
  }
  auto sweep_out = open_out(opts, "sweep.csv");
  write_numeric_csv(sweep_out, sweep, s.comment);
  auto params_out = open_out(opts, "best_parameters.txt");
  optim::write_parameters(params_out, best.best_parameters);

  const double initial = best.trace.rows.front().candidate_objective;
  log << optim::algorithm_name(best.algorithm) << " on " << s.model->name() << ": step size "
      << format_double(best.step_size) << ", objective " << format_double(initial) << " -> "
      << format_double(best.best_objective) << " in " << best.trace.rows.size() - 1 << " batch(es)\n";
  return kExitOk;
}

int cmd_fidelity(const CommandOptions& opts, std::ostream& log) {
  Setup s = load(opts, false);
  std::filesystem::create_directories(opts.out);
  FidelityReport report;
  if (s.cfg.variant == Variant::Sir) {
    epidemics::ContactGraph graph;
    try {
      graph = make_graph(s.cfg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    report = sir_fidelity(s.cfg.sir.model, graph, s.cfg.fidelity, s.cfg.optimizer.threads);
  } else {
    ExperimentConfig diff = s.cfg, ref = s.cfg;
    diff.reference = false;
    ref.reference = true;
    report = model_fidelity(*make_model(diff), *make_model(ref), s.cfg.fidelity);
  }

  NumericTable runs{{"sample", "run", "seed", "deviation"}, {}};
  for (const auto& r : report.runs) {
    runs.rows.push_back({double(r.sample), double(r.run), double(r.seed), r.deviation});
  }
  NumericTable samples{{"sample", "deviation"}, {}};
  for (std::size_t i = 0; i < report.deviations.size(); ++i) samples.rows.push_back({double(i), report.deviations[i]});
  NumericTable hist{{"bin_lo", "bin_hi", "count"}, {}};
  for (std::size_t b = 0; b < report.histogram.size(); ++b) {
    hist.rows.push_back({b * report.bin_width, (b + 1) * report.bin_width, double(report.histogram[b])});
  }
  NumericTable summary{{"samples", "median", "q95", "q99"},
                       {{double(report.deviations.size()), report.median, report.q95, report.q99}}};
  auto a = open_out(opts, "fidelity_runs.csv");
  write_numeric_csv(a, runs, s.comment);
  auto b = open_out(opts, "fidelity_samples.csv");
  write_numeric_csv(b, samples, s.comment);
  auto c = open_out(opts, "fidelity_histogram.csv");
  write_numeric_csv(c, hist, s.comment);
  auto d = open_out(opts, "fidelity_summary.csv");
  write_numeric_csv(d, summary, s.comment);
  log << variant_name(s.cfg.variant) << " fidelity over " << report.deviations.size()
      << " parametrization(s): median " << format_double(report.median) << ", 95% "
      << format_double(report.q95) << ", 99% " << format_double(report.q99) << '\n';
  return kExitOk;
}

int cmd_bench(const CommandOptions& opts, std::ostream& log) {
  Setup s = load(opts, false);
  std::filesystem::create_directories(opts.out);
  const auto rows = bench_grid(s.cfg.grid, s.cfg.bench, s.cfg.seeds.front());
  NumericTable table{{"count", "diff_time_s", "ref_time_s", "diff_mem_mib", "ref_mem_mib", "time_factor", "mem_factor"},
                     {}};
  for (const auto& r : rows) {
    table.rows.push_back({double(r.vehicles), r.diff_time_s, r.ref_time_s, r.diff_mem_mib, r.ref_mem_mib,
                          r.time_factor, r.mem_factor});
    log << r.vehicles << " vehicles: diff " << format_double(r.diff_time_s) << " s / "
        << format_double(r.diff_mem_mib) << " MiB, reference " << format_double(r.ref_time_s) << " s / "
        << format_double(r.ref_mem_mib) << " MiB\n";
  }
  auto out = open_out(opts, "bench.csv");
  write_numeric_csv(out, table, s.comment);
  return kExitOk;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  static const std::map<std::string, std::function<int(const CommandOptions&, std::ostream&)>> commands{
      {"simulate", cmd_simulate}, {"optimize", cmd_optimize}, {"fidelity", cmd_fidelity}, {"bench", cmd_bench}};
  const auto it = commands.find(name);
  if (it == commands.end()) {
    err << "error: unknown subcommand '" << name << "'\n";
    return kExitConfigError;
  }
  try {
    return it->second(opts, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace diffsim::harness
