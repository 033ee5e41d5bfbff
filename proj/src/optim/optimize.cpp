#include "diffsim/optim/optimize.hpp"

#include <chrono>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace diffsim::optim {

namespace {

using Clock = std::chrono::steady_clock;

/// Counts batches, keeps the trace and the best point seen so far.
class Tracker {
 public:
  Tracker(const Model& model, const OptimizerSettings& s, std::span<const std::uint64_t> seeds,
          OptimizationResult& result)
      : model_(model), settings_(s), seeds_(seeds), result_(result), start_(Clock::now()) {}

  bool exhausted() const {
    if (batches_ > settings_.budget_batches) return true;
    if (settings_.budget_seconds > 0.0 && batches_ > 0 && elapsed() >= settings_.budget_seconds) return true;
    return false;
  }

  std::optional<EvalResult> evaluate(std::span<const double> x, bool needs_gradient) {
    if (exhausted()) return std::nullopt;
    BatchOptions options;
    options.needs_gradient = needs_gradient;
    options.clip_bound = settings_.clip_bound;
    options.threads = settings_.threads;
    EvalResult r = batch_evaluate(model_, x, seeds_, options);
    if (batches_ == 0 || r.objective > result_.best_objective) {
      result_.best_objective = r.objective;
      result_.best_parameters.assign(x.begin(), x.end());
    }
    result_.trace.rows.push_back({batches_, elapsed(), r.objective, result_.best_objective});
    ++batches_;
    return r;
  }

  std::optional<double> objective(std::span<const double> x) {
    auto r = evaluate(x, false);
    if (!r) return std::nullopt;
    return r->objective;
  }

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  const Model& model_;
  const OptimizerSettings& settings_;
  std::span<const std::uint64_t> seeds_;
  OptimizationResult& result_;
  Clock::time_point start_;
  int batches_ = 0;
};

template <class Step>
void run_gradient(Tracker& tracker, std::vector<double>& x, Step step) {
  for (auto r = tracker.evaluate(x, true); r; r = tracker.evaluate(x, true)) step(x, *r->gradient);
}

}  // namespace

OptimizationResult optimize(const Model& model, const OptimizerSettings& s, std::span<const double> initial,
                            std::span<const std::uint64_t> seeds) {
  if (s.budget_batches < 0) throw std::invalid_argument("batch budget must be nonnegative");
  if (initial.size() != model.parameter_count()) throw std::invalid_argument("initial point has wrong length");
  OptimizationResult result;
  result.algorithm = s.algorithm;
  result.step_size = s.step_size;
  Tracker tracker(model, s, seeds, result);
  std::vector<double> x(initial.begin(), initial.end());
  const double scale = model.parameter_scale();

  switch (s.algorithm) {
    case Algorithm::SGD:
      run_gradient(tracker, x, [&](std::vector<double>& p, const std::vector<double>& g) {
        sgd_step(p, g, s.step_size);
      });
      break;
    case Algorithm::Adam: {
      AdamState state;
      run_gradient(tracker, x, [&](std::vector<double>& p, const std::vector<double>& g) {
        adam_step(state, p, g, s.step_size);
      });
      break;
    }
    case Algorithm::Nadam: {
      NadamState state;
      run_gradient(tracker, x, [&](std::vector<double>& p, const std::vector<double>& g) {
        nadam_step(state, p, g, s.step_size);
      });
      break;
    }
    default: {
      const auto f0 = tracker.objective(x);
      if (!f0) break;
      const Evaluator f = [&](std::span<const double> p) { return tracker.objective(p); };
      if (s.algorithm == Algorithm::SPSA) {
        Spsa opt(x, s.step_size, scale, s.seed);
        while (opt.iterate(f)) {}
        x = opt.x();
      } else if (s.algorithm == Algorithm::SA) {
        SimulatedAnnealing opt(x, *f0, s.step_size, scale, s.seed);
        while (opt.iterate(f)) {}
        x = opt.x();
      } else if (s.algorithm == Algorithm::DE) {
        DifferentialEvolution opt(x, *f0, s.step_size, scale, s.seed);
        while (opt.iterate(f)) {}
        x = result.best_parameters;
      } else {
        NeuroEvolution opt(x, *f0, s.step_size, scale, s.seed);
        while (opt.iterate(f)) {}
        x = result.best_parameters;
      }
      break;
    }
  }
  result.final_parameters = std::move(x);
  return result;
}

OptimizationResult sweep_step_sizes(const Model& model, OptimizerSettings settings,
                                    std::span<const double> step_sizes, std::span<const double> initial,
                                    std::span<const std::uint64_t> seeds, std::vector<OptimizationResult>* all) {
  if (step_sizes.empty()) throw std::invalid_argument("step-size sweep needs at least one value");
  OptimizationResult best;
  bool have = false;
  for (double step : step_sizes) {
    settings.step_size = step;
    OptimizationResult r = optimize(model, settings, initial, seeds);
    if (all) all->push_back(r);
    if (!have || r.best_objective > best.best_objective) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

void write_trace_csv(std::ostream& out, const OptimizationTrace& trace) {
  out << "batch,wall_clock_s,candidate_objective,best_objective\n";
  char buf[128];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.batch, r.wall_clock_s, r.candidate_objective,
                  r.best_objective);
    out << buf;
  }
}

OptimizationTrace read_trace_csv(std::istream& in) {
  OptimizationTrace trace;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "batch,wall_clock_s,candidate_objective,best_objective") {
        throw std::invalid_argument("trace CSV: unexpected header");
      }
      header = true;
      continue;
    }
    TraceRow r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &r.batch, &r.wall_clock_s, &r.candidate_objective,
                    &r.best_objective) != 4) {
      throw std::invalid_argument("trace CSV: malformed row");
    }
    trace.rows.push_back(r);
  }
  return trace;
}

void write_parameters(std::ostream& out, std::span<const double> params) {
  char buf[40];
  for (double p : params) {
    std::snprintf(buf, sizeof buf, "%.17g\n", p);
    out << buf;
  }
}

std::vector<double> read_parameters(std::istream& in) {
  std::vector<double> params;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::size_t used = 0;
    const double v = std::stod(line, &used);
    if (line.find_first_not_of(" \t\r", used) != std::string::npos) {
      throw std::invalid_argument("parameter file: malformed line '" + line + "'");
    }
    params.push_back(v);
  }
  return params;
}

}  // namespace diffsim::optim
