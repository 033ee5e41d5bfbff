#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "diffsim/harness/commands.hpp"
#include "diffsim/harness/config.hpp"
#include "diffsim/harness/csv.hpp"
#include "diffsim/harness/experiments.hpp"
#include "diffsim/harness/models.hpp"
#include "fd.hpp"

using namespace diffsim;
using namespace diffsim::harness;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("diffsim_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

NumericTable read_table(const fs::path& p) {
  std::ifstream in(p);
  return read_numeric_csv(in);
}

}  // namespace

TEST_CASE("config parsing", "[harness][config]") {
  const Config c = parse(
      "# comment\n"
      "model = grid_static   # trailing comment\n"
      "grid.width=4\n"
      "\n"
      "seeds = 1, 5..8, 20\n"
      "optimizer.step_sizes = 1e-3, 0.1\n"
      "trajectory = true\n");
  CHECK(c.get_string("model", "") == "grid_static");
  CHECK(c.get_int("grid.width", 0) == 4);
  CHECK(c.get_int("grid.height", 7) == 7);
  CHECK(c.get_seeds("seeds", {}) == std::vector<std::uint64_t>{1, 5, 6, 7, 8, 20});
  CHECK(c.get_doubles("optimizer.step_sizes", {}) == std::vector<double>{1e-3, 0.1});
  CHECK(c.get_bool("trajectory", false));
  CHECK_NOTHROW(c.reject_unknown());

  CHECK_THROWS_AS(parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse("grid.widht = 3\n").reject_unknown(), ConfigError);
  CHECK_THROWS_AS(parse("grid.width = three\n").get_int("grid.width", 0), ConfigError);
  CHECK_THROWS_AS(parse("seeds = 5..2\n").get_seeds("seeds", {}), ConfigError);
  CHECK_THROWS_AS(parse("trajectory = maybe\n").get_bool("trajectory", false), ConfigError);
}

TEST_CASE("config hash is order independent and content sensitive", "[harness][config]") {
  const Config a = parse("model = sir\nsir.agents = 10\n");
  const Config b = parse("sir.agents = 10\nmodel = sir\n");
  const Config c = parse("sir.agents = 11\nmodel = sir\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("scenario includes", "[harness][config]") {
  const fs::path dir = scratch("include");
  fs::create_directories(dir / "scenarios");
  write_file(dir / "scenarios" / "base.cfg", "model = grid_static\ngrid.width = 3\ngrid.height = 3\n");
  write_file(dir / "run.cfg", "scenario = scenarios/base.cfg\ngrid.width = 2\n");
  const Config c = Config::load(dir / "run.cfg");
  CHECK(c.get_int("grid.width", 0) == 2);
  CHECK(c.get_int("grid.height", 0) == 3);
  CHECK(c.get_string("model", "") == "grid_static");
  write_file(dir / "missing.cfg", "scenario = nope.cfg\n");
  CHECK_THROWS_AS(Config::load(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("experiment validation", "[harness][config]") {
  CHECK_THROWS_AS(build_experiment(parse("model = boat\n")), ConfigError);
  CHECK_THROWS_AS(build_experiment(parse("mode = fast\n")), ConfigError);
  CHECK_THROWS_AS(build_experiment(parse("smooth.k = 4\nsmooth.eps = 0.25\n")), ConfigError);
  CHECK_THROWS_AS(build_experiment(parse("model = grid_static\ngrid.turn_left = 0.5\n")), ConfigError);
  CHECK_THROWS_AS(build_experiment(parse("optimizer.name = newton\n")), ConfigError);
  CHECK_THROWS_AS(build_experiment(parse("model = sir\nsir.threshold = cubic\n")), ConfigError);
  const ExperimentConfig e = build_experiment(parse("model = grid_nn\ngrid.hidden = 60\nseeds = 1..10\n"));
  CHECK(e.variant == Variant::GridNn);
  CHECK(e.hidden == 60);
  CHECK(e.seeds.size() == 10);
}

TEST_CASE("shipped example configs are valid", "[harness][config]") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(DIFFSIM_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    INFO(entry.path());
    CHECK_NOTHROW(build_experiment(Config::load(entry.path()), entry.path().parent_path()));
    ++seen;
  }
  CHECK(seen >= 5);
}

TEST_CASE("csv helpers", "[harness][csv]") {
  const std::vector<std::uint64_t> seeds{1, 2, 9};
  CHECK(provenance_comment(0xabcULL, seeds) == "# config_hash=0000000000000abc seeds=1,2,9");
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);

  NumericTable t{{"a", "b"}, {{1.0, 0.1}, {-1.0 / 3.0, 1e10}}};
  std::stringstream io;
  write_numeric_csv(io, t, "# hello");
  const NumericTable back = read_numeric_csv(io);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_numeric_csv(ragged), std::invalid_argument);

  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.0) == 1.0);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 1.0) == 4.0);
  CHECK(quantile({0.0, 10.0}, 0.95) == Approx(9.5));
}

TEST_CASE("deviation summary", "[harness]") {
  const FidelityReport r = summarize_deviations({0.0, 0.01, 0.02, 0.03, 0.04}, 4);
  CHECK(r.median == 0.02);
  CHECK(r.q95 == Approx(0.038));
  CHECK(r.bin_width == Approx(0.01));
  REQUIRE(r.histogram.size() == 4);
  std::size_t total = 0;
  for (auto n : r.histogram) total += n;
  CHECK(total == 5);
}

TEST_CASE("model adapters", "[harness][models]") {
  SECTION("single road gradient matches finite differences") {
    ExperimentConfig e = build_experiment(parse("model = single_road\nsingle_road.vehicles = 2\n"));
    const auto model = make_model(e);
    REQUIRE(model->parameter_count() == 1);
    const std::vector<double> x{6.0};
    const auto r = model->run(x, 1, true);
    auto f = [&](const std::vector<double>& p) { return model->run(p, 1, false).objective; };
    CHECK(r.objective == f(x));
    CHECK(testing::rel_err(r.gradient.at(0), testing::central_difference(f, x, 0, 1e-5), 1e-4) <= 1e-3);
  }

  SECTION("grid nn parameter count") {
    const ExperimentConfig e = build_experiment(parse("model = grid_nn\ngrid.hidden = 60\n"));
    CHECK(make_model(e)->parameter_count() == 91585);
    const ExperimentConfig small =
        build_experiment(parse("model = grid_nn\ngrid.width = 2\ngrid.height = 2\ngrid.hidden = 2\n"));
    CHECK(make_model(small)->parameter_count() == 494);
  }

  SECTION("reference models never return gradients") {
    const ExperimentConfig e = build_experiment(
        parse("model = grid_static\nmode = reference\ngrid.width = 2\ngrid.height = 2\ngrid.vehicles = 8\n"
              "grid.duration = 10\n"));
    const auto model = make_model(e);
    const auto x = model->initial_parameters(1);
    CHECK(model->run(x, 1, true).gradient.empty());
    CHECK(model->run(x, 1, false).objective == model->run(x, 1, false).objective);
  }

  SECTION("sir calibration objective is zero at the target inputs") {
    const ExperimentConfig e = build_experiment(
        parse("model = sir\nsir.objective = calibration\nsir.agents = 100\nsir.nodes = 20\nmode = reference\n"
              "seeds = 1000\nsir.target_seed = 1000\n"));
    const auto model = make_model(e);
    std::vector<double> x{e.sir.initial_prob, e.sir.recovery_rate};
    x.resize(model->parameter_count(), e.sir.coefficient);
    CHECK(model->run(x, 1000, false).objective == 0.0);
  }
}

TEST_CASE("commands", "[harness][commands]") {
  const fs::path dir = scratch("commands");
  std::ostringstream log, err;
  CommandOptions o;
  o.out = dir / "out";

  SECTION("simulate writes per-run values and is deterministic") {
    write_file(dir / "sim.cfg",
               "model = grid_static\ngrid.width = 2\ngrid.height = 2\ngrid.vehicles = 8\ngrid.duration = 20\n"
               "seeds = 1..3\ntrajectory = true\n");
    o.config = dir / "sim.cfg";
    REQUIRE(run_command("simulate", o, log, err) == kExitOk);
    const NumericTable runs = read_table(o.out / "runs.csv");
    CHECK(runs.header == std::vector<std::string>{"seed", "objective"});
    REQUIRE(runs.rows.size() == 3);
    const NumericTable sim = read_table(o.out / "simulate.csv");
    REQUIRE(sim.rows.size() == 1);
    CHECK(sim.header.size() == 1 + 4);
    CHECK(sim.rows[0][0] == Approx((runs.rows[0][1] + runs.rows[1][1] + runs.rows[2][1]) / 3).epsilon(1e-14));
    CHECK(fs::exists(o.out / "trajectory.csv"));

    CommandOptions again = o;
    again.out = dir / "again";
    again.threads = 3;
    REQUIRE(run_command("simulate", again, log, err) == kExitOk);
    CHECK(read_table(again.out / "runs.csv").rows == runs.rows);
  }

  SECTION("optimize writes a trace per step size and the best parameters") {
    write_file(dir / "opt.cfg",
               "model = single_road\noptimizer.name = adam\noptimizer.step_sizes = 0.01, 0.1\n"
               "optimizer.budget_batches = 3\nseeds = 1,2\n");
    o.config = dir / "opt.cfg";
    REQUIRE(run_command("optimize", o, log, err) == kExitOk);
    const NumericTable trace = read_table(o.out / "trace.csv");
    CHECK(trace.rows.size() == 4);
    CHECK(fs::exists(o.out / "trace_step0.csv"));
    CHECK(fs::exists(o.out / "trace_step1.csv"));
    CHECK(read_table(o.out / "sweep.csv").rows.size() == 2);
    std::ifstream p(o.out / "best_parameters.txt");
    CHECK(optim::read_parameters(p).size() == 1);
  }

  SECTION("fidelity summary agrees with the per-sample table") {
    write_file(dir / "fid.cfg",
               "model = sir\nsir.agents = 200\nsir.nodes = 50\nfidelity.samples = 6\nfidelity.runs = 2\n");
    o.config = dir / "fid.cfg";
    REQUIRE(run_command("fidelity", o, log, err) == kExitOk);
    const NumericTable samples = read_table(o.out / "fidelity_samples.csv");
    const NumericTable summary = read_table(o.out / "fidelity_summary.csv");
    REQUIRE(samples.rows.size() == 6);
    std::vector<double> dev;
    for (const auto& r : samples.rows) dev.push_back(r.back());
    REQUIRE(summary.rows.size() == 1);
    CHECK(summary.rows[0][0] == 6);
    CHECK(summary.rows[0][1] == quantile(dev, 0.5));
    CHECK(summary.rows[0][2] == quantile(dev, 0.95));
    CHECK(read_table(o.out / "fidelity_runs.csv").rows.size() == 12);
  }

  SECTION("configuration errors map to exit code 2") {
    write_file(dir / "bad.cfg", "model = grid_static\ngrid.unknown_key = 1\n");
    o.config = dir / "bad.cfg";
    CHECK(run_command("simulate", o, log, err) == kExitConfigError);
    write_file(dir / "bad2.cfg", "model = single_road\nmode = reference\noptimizer.name = adam\n");
    o.config = dir / "bad2.cfg";
    CHECK(run_command("optimize", o, log, err) == kExitConfigError);
    o.config = dir / "does_not_exist.cfg";
    CHECK(run_command("simulate", o, log, err) == kExitConfigError);
    CHECK(run_command("teleport", o, log, err) == kExitConfigError);
  }
}
