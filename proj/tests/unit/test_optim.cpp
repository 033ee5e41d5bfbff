#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "diffsim/optim/batch.hpp"
#include "diffsim/optim/optimize.hpp"

using namespace diffsim::optim;
using Catch::Approx;

namespace {

/// f(x; seed) = -sum_i (x_i - target_i - 0.1 * seed)^2, with its exact gradient.
class Quadratic final : public Model {
 public:
  explicit Quadratic(std::vector<double> target) : target_(std::move(target)) {}
  std::string name() const override { return "quadratic"; }
  std::size_t parameter_count() const override { return target_.size(); }
  std::vector<double> initial_parameters(std::uint64_t) const override {
    return std::vector<double>(target_.size(), 0.0);
  }
  RunResult run(std::span<const double> x, std::uint64_t seed, bool needs_gradient) const override {
    RunResult r;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - target_[i] - 0.1 * static_cast<double>(seed);
      r.objective -= d * d;
      if (needs_gradient) r.gradient.push_back(-2.0 * d);
    }
    return r;
  }

 private:
  std::vector<double> target_;
};

}  // namespace

TEST_CASE("gradient clipping", "[optim]") {
  const std::vector<double> g{15.0, -3.0, -12.0, 10.0, 0.0};
  CHECK(clip_gradient(g, 10.0) == std::vector<double>{10.0, -3.0, -10.0, 10.0, 0.0});
  CHECK_THROWS_AS(clip_gradient(g, 0.0), std::invalid_argument);
}

TEST_CASE("batch evaluation", "[optim]") {
  const Quadratic model({1.0, -2.0});
  const std::vector<double> x{0.5, 0.5};
  BatchOptions opt;
  opt.needs_gradient = true;

  SECTION("single seed equals the run") {
    const std::vector<std::uint64_t> seeds{3};
    const EvalResult r = batch_evaluate(model, x, seeds, opt);
    const RunResult run = model.run(x, 3, true);
    CHECK(r.objective == run.objective);
    CHECK(*r.gradient == run.gradient);
    CHECK(r.per_run == std::vector<double>{run.objective});
  }

  SECTION("two runs are averaged after clipping") {
    // seed 1: d = (-0.6, 2.4) -> g = (1.2, -4.8); seed 40: d = (-4.5, -1.5) -> g = (9, 3)
    const std::vector<std::uint64_t> seeds{1, 40};
    opt.clip_bound = 5.0;
    const EvalResult r = batch_evaluate(model, x, seeds, opt);
    CHECK((*r.gradient)[0] == Approx((1.2 + 5.0) / 2).epsilon(1e-14));
    CHECK((*r.gradient)[1] == Approx((-4.8 + 3.0) / 2).epsilon(1e-14));
    CHECK(r.objective == Approx(-(0.36 + 5.76 + 20.25 + 2.25) / 2).epsilon(1e-14));
  }

  SECTION("duplicated seeds give the same mean as one copy") {
    const std::vector<std::uint64_t> one{7}, two{7, 7};
    CHECK(batch_evaluate(model, x, two, opt).objective == batch_evaluate(model, x, one, opt).objective);
  }

  SECTION("seed order and thread count do not change results") {
    std::vector<std::uint64_t> seeds(25);
    std::iota(seeds.begin(), seeds.end(), 1);
    const EvalResult a = batch_evaluate(model, x, seeds, opt);
    std::mt19937_64 rng(3);
    std::shuffle(seeds.begin(), seeds.end(), rng);
    opt.threads = 4;
    const EvalResult b = batch_evaluate(model, x, seeds, opt);
    CHECK(a.objective == b.objective);
    CHECK(*a.gradient == *b.gradient);
  }

  SECTION("no gradient unless requested") {
    opt.needs_gradient = false;
    const std::vector<std::uint64_t> seeds{1, 2};
    CHECK_FALSE(batch_evaluate(model, x, seeds, opt).gradient.has_value());
  }
}

TEST_CASE("gradient updates", "[optim]") {
  const std::vector<double> zero(3, 0.0);
  std::vector<double> x{1.0, -2.0, 3.0};
  const auto x0 = x;

  sgd_step(x, zero, 0.1);
  CHECK(x == x0);
  AdamState adam;
  adam_step(adam, x, zero, 0.1);
  CHECK(x == x0);
  NadamState nadam;
  nadam_step(nadam, x, zero, 0.1);
  CHECK(x == x0);

  const std::vector<double> g{4.0, -0.5, 1e-3};
  sgd_step(x, g, 0.1);
  CHECK(x[0] == Approx(1.4));
  CHECK(x[1] == Approx(-2.05));

  // First Adam step moves every coordinate by ~step in the direction of g.
  std::vector<double> y = x0;
  AdamState first;
  adam_step(first, y, g, 0.01);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(y[i] - x0[i] == Approx(0.01 * (g[i] > 0 ? 1.0 : -1.0)).epsilon(1e-3));
  }
  std::vector<double> z = x0;
  NadamState nfirst;
  nadam_step(nfirst, z, g, 0.01);
  for (std::size_t i = 0; i < 3; ++i) CHECK((z[i] - x0[i]) * g[i] > 0.0);
}

TEST_CASE("gradient methods converge on a concave quadratic", "[optim]") {
  for (Algorithm alg : {Algorithm::SGD, Algorithm::Adam, Algorithm::Nadam}) {
    std::vector<double> x{0.0, 5.0};
    const std::vector<double> target{3.0, -1.0};
    AdamState a;
    NadamState n;
    int steps = 0;
    auto err = [&] { return std::max(std::abs(x[0] - target[0]), std::abs(x[1] - target[1])); };
    while (err() > 1e-6 && steps < 10000) {
      const std::vector<double> g{-2.0 * (x[0] - target[0]), -2.0 * (x[1] - target[1])};
      if (alg == Algorithm::SGD) sgd_step(x, g, 1e-2);
      if (alg == Algorithm::Adam) adam_step(a, x, g, 1e-2);
      if (alg == Algorithm::Nadam) nadam_step(n, x, g, 1e-2);
      ++steps;
    }
    INFO(algorithm_name(alg) << " after " << steps << " steps, error " << err());
    CHECK(err() <= 1e-6);
  }
}

TEST_CASE("algorithm names", "[optim]") {
  for (Algorithm a : {Algorithm::SGD, Algorithm::Adam, Algorithm::Nadam, Algorithm::SPSA, Algorithm::SA,
                      Algorithm::DE, Algorithm::CNE}) {
    CHECK(parse_algorithm(algorithm_name(a)) == a);
  }
  CHECK(parse_algorithm("adam") == Algorithm::Adam);
  CHECK(uses_gradient(Algorithm::Nadam));
  CHECK_FALSE(uses_gradient(Algorithm::CNE));
  CHECK_THROWS_AS(parse_algorithm("bfgs"), std::invalid_argument);
}

TEST_CASE("simultaneous perturbation estimate", "[optim]") {
  // One dimension, linear f = 2.5 x: the estimate is the slope exactly.
  const double c = 0.1;
  for (double d : {1.0, -1.0}) {
    const double fp = 2.5 * (0.3 + c * d), fm = 2.5 * (0.3 - c * d);
    CHECK(spsa_estimate(fp, fm, c, std::vector<double>{d})[0] == Approx(2.5).epsilon(1e-14));
  }
  // At the optimum of a quadratic the estimates average out to ~0.
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> mean(4, 0.0);
  const int draws = 1000;
  for (int k = 0; k < draws; ++k) {
    std::vector<double> delta(4);
    for (double& d : delta) d = coin(rng) ? 1.0 : -1.0;
    double fp = 0, fm = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double xi = (i == 0 ? 0.05 : 0.0);  // slightly off-centre in x0
      fp -= (xi + c * delta[i]) * (xi + c * delta[i]);
      fm -= (xi - c * delta[i]) * (xi - c * delta[i]);
    }
    const auto g = spsa_estimate(fp, fm, c, delta);
    for (std::size_t i = 0; i < 4; ++i) mean[i] += g[i] / draws;
  }
  CHECK(mean[0] == Approx(-0.1).margin(0.02));  // true gradient -2 * 0.05
  for (std::size_t i = 1; i < 4; ++i) CHECK(mean[i] == Approx(0.0).margin(0.02));
}

TEST_CASE("gradient-free optimizers", "[optim]") {
  auto f = [](std::span<const double> x) -> std::optional<double> {
    double s = 0;
    for (double v : x) s -= (v - 1.0) * (v - 1.0);
    return s;
  };

  SECTION("SPSA is deterministic per seed and improves") {
    Spsa a({0.0, 0.0}, 0.5, 1.0, 9), b({0.0, 0.0}, 0.5, 1.0, 9);
    for (int i = 0; i < 200; ++i) {
      a.iterate(f);
      b.iterate(f);
    }
    CHECK(a.x() == b.x());
    CHECK(*f(a.x()) > -0.1);
  }

  SECTION("annealing at zero temperature only accepts improvements") {
    AnnealingParams p;
    p.initial_temperature = 1e-300;
    SimulatedAnnealing sa({0.0, 0.0}, *f(std::vector<double>{0.0, 0.0}), 0.1, 1.0, 3, p);
    double last = sa.value();
    for (int i = 0; i < 300; ++i) {
      const auto before = sa.x();
      sa.iterate(f);
      CHECK(sa.value() >= last);
      if (sa.value() == last) CHECK(sa.x() == before);
      last = sa.value();
    }
    CHECK(last > -0.05);
  }

  SECTION("differential evolution without diversity stagnates") {
    const std::vector<double> x0{0.2, -0.4};
    DifferentialEvolution de(x0, *f(x0), 0.0, 1.0, 5);
    for (int i = 0; i < 5; ++i) de.iterate(f);
    for (const auto& m : de.population()) CHECK(m == x0);
  }

  SECTION("differential evolution improves with diversity") {
    const std::vector<double> x0{0.0, 0.0};
    DifferentialEvolution de(x0, *f(x0), 0.5, 1.0, 5);
    for (int i = 0; i < 60; ++i) de.iterate(f);
    CHECK(*std::max_element(de.fitness().begin(), de.fitness().end()) > -0.01);
  }

  SECTION("neuroevolution never loses its best member") {
    const std::vector<double> x0{0.0, 0.0};
    NeuroEvolution cne(x0, *f(x0), 0.3, 1.0, 5);
    double best = -1e300;
    for (int i = 0; i < 60; ++i) {
      cne.iterate(f);
      const double now = *std::max_element(cne.fitness().begin(), cne.fitness().end());
      CHECK(now >= best);
      best = now;
    }
    CHECK(best > -0.05);
  }

  SECTION("an exhausted evaluator stops every optimizer") {
    auto none = [](std::span<const double>) -> std::optional<double> { return std::nullopt; };
    Spsa s({0.0}, 0.1, 1.0, 1);
    CHECK_FALSE(s.iterate(none));
    SimulatedAnnealing a({0.0}, 0.0, 0.1, 1.0, 1);
    CHECK_FALSE(a.iterate(none));
    DifferentialEvolution d({0.0}, 0.0, 0.1, 1.0, 1);
    CHECK_FALSE(d.iterate(none));
    NeuroEvolution n({0.0}, 0.0, 0.1, 1.0, 1);
    CHECK_FALSE(n.iterate(none));
  }
}

TEST_CASE("optimization driver", "[optim]") {
  const Quadratic model({1.0, -2.0, 0.5});
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const std::vector<double> x0 = model.initial_parameters(0);
  const double f0 = batch_evaluate(model, x0, seeds, {}).objective;

  OptimizerSettings s;
  s.budget_batches = 0;
  for (Algorithm a : {Algorithm::SGD, Algorithm::Adam, Algorithm::Nadam, Algorithm::SPSA, Algorithm::SA,
                      Algorithm::DE, Algorithm::CNE}) {
    s.algorithm = a;
    s.budget_batches = 0;
    const OptimizationResult zero = optimize(model, s, x0, seeds);
    REQUIRE(zero.trace.rows.size() == 1);
    CHECK(zero.trace.rows[0].candidate_objective == f0);

    s.budget_batches = 40;
    s.step_size = 0.05;
    const OptimizationResult r = optimize(model, s, x0, seeds);
    INFO(algorithm_name(a));
    CHECK(r.trace.rows.size() == 41);
    CHECK(r.trace.rows[0].candidate_objective == f0);
    for (std::size_t i = 1; i < r.trace.rows.size(); ++i) {
      CHECK(r.trace.rows[i].batch == static_cast<int>(i));
      CHECK(r.trace.rows[i].best_objective >= r.trace.rows[i - 1].best_objective);
      CHECK(r.trace.rows[i].best_objective ==
            std::max(r.trace.rows[i - 1].best_objective, r.trace.rows[i].candidate_objective));
    }
    CHECK(batch_evaluate(model, r.best_parameters, seeds, {}).objective == r.best_objective);

    s.threads = 3;
    const OptimizationResult again = optimize(model, s, x0, seeds);
    s.threads = 1;
    CHECK(again.best_parameters == r.best_parameters);
    for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
      CHECK(again.trace.rows[i].candidate_objective == r.trace.rows[i].candidate_objective);
    }
  }

  SECTION("step-size sweep keeps the best run") {
    s.algorithm = Algorithm::SGD;
    s.budget_batches = 20;
    const std::vector<double> steps{1e-4, 1e-2, 1e-1};
    std::vector<OptimizationResult> all;
    const OptimizationResult best = sweep_step_sizes(model, s, steps, x0, seeds, &all);
    REQUIRE(all.size() == 3);
    for (const auto& r : all) CHECK(best.best_objective >= r.best_objective);
    CHECK(best.step_size == 1e-1);
  }

  SECTION("trace and parameter files round-trip") {
    s.algorithm = Algorithm::Adam;
    s.budget_batches = 5;
    const OptimizationResult r = optimize(model, s, x0, seeds);
    std::stringstream io;
    io << "# provenance line\n";
    write_trace_csv(io, r.trace);
    const OptimizationTrace back = read_trace_csv(io);
    REQUIRE(back.rows.size() == r.trace.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
      CHECK(back.rows[i].batch == r.trace.rows[i].batch);
      CHECK(back.rows[i].wall_clock_s == r.trace.rows[i].wall_clock_s);
      CHECK(back.rows[i].candidate_objective == r.trace.rows[i].candidate_objective);
      CHECK(back.rows[i].best_objective == r.trace.rows[i].best_objective);
    }
    std::stringstream p;
    const std::vector<double> params{0.1, -1.0 / 3.0, 1e-300, 12345.678};
    write_parameters(p, params);
    CHECK(read_parameters(p) == params);
  }

  SECTION("invalid settings are rejected") {
    s.budget_batches = -1;
    CHECK_THROWS_AS(optimize(model, s, x0, seeds), std::invalid_argument);
    s.budget_batches = 1;
    CHECK_THROWS_AS(optimize(model, s, std::vector<double>{0.0}, seeds), std::invalid_argument);
  }
}
