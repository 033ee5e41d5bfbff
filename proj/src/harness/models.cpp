#include "diffsim/harness/models.hpp"

#include <fstream>
#include <random>

#include "diffsim/epidemics/sir.hpp"
#include "diffsim/neural.hpp"
#include "diffsim/traffic/grid.hpp"
#include "diffsim/traffic/single_road.hpp"

namespace diffsim::harness {

namespace {

/// Runs `body(ops, inputs)` in the requested flavour and packages the
/// objective (and gradient).
template <class Body>
optim::RunResult dispatch(std::span<const double> params, bool reference, bool needs_gradient,
                          const smooth::SmoothConfig& sm, Body body) {
  optim::RunResult r;
  if (reference) {
    r.objective = body(CrispOps{sm}, std::vector<double>(params.begin(), params.end()));
    return r;
  }
  if (!needs_gradient) {
    r.objective = body(SmoothOps<double>{sm}, std::vector<double>(params.begin(), params.end()));
    return r;
  }
  thread_local Tape tape;
  tape.reset();
  std::vector<Var> inputs;
  inputs.reserve(params.size());
  for (double p : params) inputs.push_back(tape.new_input(p));
  const Var out = body(SmoothOps<Var>{sm}, inputs);
  r.objective = out.value();
  const ad::Gradient g = tape.backward(out);
  r.gradient.assign(g.values().begin(), g.values().end());
  return r;
}

std::vector<double> uniform_vector(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (double& x : out) x = u(rng);
  return out;
}

class SingleRoadModel final : public SimModel {
 public:
  SingleRoadModel(const traffic::SingleRoadConfig& cfg, bool reference) : SimModel(reference), cfg_(cfg) {
    cfg_.validate();
  }
  std::string name() const override { return "single_road"; }
  std::size_t parameter_count() const override { return 1; }
  double parameter_scale() const override { return 0.5 * cfg_.signal_period; }
  std::vector<double> initial_parameters(std::uint64_t seed) const override {
    return uniform_vector(1, 0.0, cfg_.signal_period, seed);
  }
  optim::RunResult run(std::span<const double> params, std::uint64_t, bool needs_gradient) const override {
    check(params);
    return dispatch(params, reference_, needs_gradient, cfg_.smooth, [&](const auto& ops, const auto& x) {
      using Ops = std::decay_t<decltype(ops)>;
      return traffic::run_single_road<Ops>(cfg_, x[0], ops);
    });
  }
  void trajectory(std::span<const double> params, std::uint64_t, std::ostream& out) const override {
    check(params);
    std::vector<traffic::TrajectoryRow> rows;
    if (reference_) {
      traffic::run_single_road<CrispOps>(cfg_, params[0], CrispOps{cfg_.smooth}, &rows);
    } else {
      traffic::run_single_road<SmoothOps<double>>(cfg_, params[0], SmoothOps<double>{cfg_.smooth}, &rows);
    }
    traffic::write_trajectory_csv(out, rows);
  }

 private:
  void check(std::span<const double> params) const {
    if (params.size() != 1) throw std::invalid_argument("single_road takes one parameter (first red time)");
  }
  traffic::SingleRoadConfig cfg_;
};

class GridStaticModel final : public SimModel {
 public:
  GridStaticModel(const traffic::GridConfig& cfg, bool reference) : SimModel(reference), cfg_(cfg) {
    cfg_.validate();
  }
  std::string name() const override { return "grid_static"; }
  std::size_t parameter_count() const override { return static_cast<std::size_t>(cfg_.intersections()); }
  double parameter_scale() const override { return 0.5 * cfg_.signal_period; }
  std::vector<double> initial_parameters(std::uint64_t seed) const override {
    return uniform_vector(parameter_count(), 0.0, cfg_.signal_period, seed);
  }
  optim::RunResult run(std::span<const double> params, std::uint64_t seed, bool needs_gradient) const override {
    return dispatch(params, reference_, needs_gradient, cfg_.smooth, [&](const auto& ops, const auto& x) {
      using Ops = std::decay_t<decltype(ops)>;
      using R = typename Ops::Real;
      return traffic::run_grid_static<Ops>(cfg_, std::span<const R>(x), seed, ops);
    });
  }
  void trajectory(std::span<const double> params, std::uint64_t seed, std::ostream& out) const override {
    std::vector<traffic::TrajectoryRow> rows;
    if (reference_) {
      traffic::run_grid_static<CrispOps>(cfg_, params, seed, CrispOps{cfg_.smooth}, &rows);
    } else {
      traffic::run_grid_static<SmoothOps<double>>(cfg_, params, seed, SmoothOps<double>{cfg_.smooth}, &rows);
    }
    traffic::write_trajectory_csv(out, rows);
  }

 private:
  traffic::GridConfig cfg_;
};

class GridNnModel final : public SimModel {
 public:
  GridNnModel(const traffic::GridConfig& cfg, std::size_t hidden, bool reference)
      : SimModel(reference),
        cfg_(cfg),
        spec_(neural::NetSpec::for_grid(static_cast<std::size_t>(cfg.intersections()), hidden)) {
    cfg_.validate();
  }
  std::string name() const override { return "grid_nn"; }
  std::size_t parameter_count() const override { return spec_.coefficient_count(); }
  std::vector<double> initial_parameters(std::uint64_t seed) const override {
    return neural::init_standard_normal(spec_, seed);
  }
  optim::RunResult run(std::span<const double> params, std::uint64_t seed, bool needs_gradient) const override {
    return dispatch(params, reference_, needs_gradient, cfg_.smooth, [&](const auto& ops, const auto& x) {
      using Ops = std::decay_t<decltype(ops)>;
      using R = typename Ops::Real;
      return traffic::run_grid_nn<Ops>(cfg_, spec_, std::span<const R>(x), seed, ops);
    });
  }
  void trajectory(std::span<const double> params, std::uint64_t seed, std::ostream& out) const override {
    std::vector<traffic::TrajectoryRow> rows;
    if (reference_) {
      traffic::run_grid_nn<CrispOps>(cfg_, spec_, params, seed, CrispOps{cfg_.smooth}, &rows);
    } else {
      traffic::run_grid_nn<SmoothOps<double>>(cfg_, spec_, params, seed, SmoothOps<double>{cfg_.smooth}, &rows);
    }
    traffic::write_trajectory_csv(out, rows);
  }

 private:
  traffic::GridConfig cfg_;
  neural::NetSpec spec_;
};

class SirModel final : public SimModel {
 public:
  SirModel(const SirSetup& setup, epidemics::ContactGraph graph, bool reference)
      : SimModel(reference), setup_(setup), graph_(std::move(graph)) {
    setup_.model.validate();
    graph_.validate();
    if (setup_.objective == "calibration") {
      epidemics::EpidemicInputs<double> target{setup_.initial_prob, graph_.coefficients, setup_.recovery_rate};
      target_ = epidemics::run_sir<CrispOps>(setup_.model, graph_, target, setup_.target_seed,
                                             CrispOps{setup_.model.smooth});
    }
  }
  std::string name() const override { return "sir"; }
  std::size_t parameter_count() const override { return 2 + graph_.nodes(); }
  double parameter_scale() const override { return 0.01; }
  std::vector<double> initial_parameters(std::uint64_t seed) const override {
    std::vector<double> x = uniform_vector(parameter_count(), 0.0, 0.1, seed);
    x[1] *= 0.1;
    return x;
  }
  optim::RunResult run(std::span<const double> params, std::uint64_t seed, bool needs_gradient) const override {
    if (params.size() != parameter_count()) throw std::invalid_argument("sir: parameter count mismatch");
    return dispatch(params, reference_, needs_gradient, setup_.model.smooth, [&](const auto& ops, const auto& x) {
      using Ops = std::decay_t<decltype(ops)>;
      using R = typename Ops::Real;
      const epidemics::EpidemicInputs<R> inputs = make_inputs<R>(x);
      const auto rows = epidemics::run_sir<Ops>(setup_.model, graph_, inputs, seed, ops);
      if (setup_.objective == "calibration") {
        return R(-epidemics::calibration_loss<R>(rows, target_));
      }
      return R(rows.back().infected + rows.back().recovered);
    });
  }
  void trajectory(std::span<const double> params, std::uint64_t seed, std::ostream& out) const override {
    std::vector<epidemics::SirCounts<double>> rows;
    if (reference_) {
      rows = epidemics::run_sir<CrispOps>(setup_.model, graph_, make_inputs<double>(params), seed,
                                          CrispOps{setup_.model.smooth});
    } else {
      rows = epidemics::run_sir<SmoothOps<double>>(setup_.model, graph_, make_inputs<double>(params), seed,
                                                   SmoothOps<double>{setup_.model.smooth});
    }
    epidemics::write_counts_csv(out, rows);
  }

 private:
  template <class R, class V>
  epidemics::EpidemicInputs<R> make_inputs(const V& x) const {
    epidemics::EpidemicInputs<R> in;
    in.initial_infection_prob = x[0];
    in.recovery_rate = x[1];
    in.location_coefficients.assign(x.begin() + 2, x.end());
    return in;
  }

  SirSetup setup_;
  epidemics::ContactGraph graph_;
  std::vector<epidemics::SirCounts<double>> target_;
};

}  // namespace

std::unique_ptr<SimModel> make_single_road_model(const traffic::SingleRoadConfig& cfg, bool reference) {
  return std::make_unique<SingleRoadModel>(cfg, reference);
}

std::unique_ptr<SimModel> make_grid_static_model(const traffic::GridConfig& cfg, bool reference) {
  return std::make_unique<GridStaticModel>(cfg, reference);
}

std::unique_ptr<SimModel> make_grid_nn_model(const traffic::GridConfig& cfg, std::size_t hidden, bool reference) {
  return std::make_unique<GridNnModel>(cfg, hidden, reference);
}

std::unique_ptr<SimModel> make_sir_model(const SirSetup& setup, epidemics::ContactGraph graph, bool reference) {
  return std::make_unique<SirModel>(setup, std::move(graph), reference);
}

epidemics::ContactGraph make_graph(const ExperimentConfig& cfg) {
  if (!cfg.sir.graph_file.empty()) {
    std::filesystem::path path = cfg.sir.graph_file;
    if (path.is_relative()) path = cfg.base_dir / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open graph file '" + path.string() + "'");
    try {
      return epidemics::read_graph(in);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return epidemics::random_geometric_graph(cfg.sir.nodes, cfg.sir.average_degree, cfg.sir.graph_seed,
                                           cfg.sir.coefficient);
}

std::unique_ptr<SimModel> make_model(const ExperimentConfig& cfg) {
  switch (cfg.variant) {
    case Variant::SingleRoad: return make_single_road_model(cfg.single_road, cfg.reference);
    case Variant::GridStatic: return make_grid_static_model(cfg.grid, cfg.reference);
    case Variant::GridNn: return make_grid_nn_model(cfg.grid, cfg.hidden, cfg.reference);
    case Variant::Sir: return make_sir_model(cfg.sir, make_graph(cfg), cfg.reference);
  }
  throw ConfigError("unknown model variant");
}

}  // namespace diffsim::harness
