#pragma once

// Optimizers. The objective is maximized throughout: gradient methods step
// along +gradient, gradient-free methods keep the larger value.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace diffsim::optim {

enum class Algorithm { SGD, Adam, Nadam, SPSA, SA, DE, CNE };

std::string algorithm_name(Algorithm a);
/// Case-insensitive; throws std::invalid_argument for unknown names.
Algorithm parse_algorithm(const std::string& name);
bool uses_gradient(Algorithm a);

// ---------------------------------------------------------------------------
// Gradient-based updates

struct MomentParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long iteration = 0;
};

struct NadamState {
  std::vector<double> m;
  std::vector<double> v;
  long iteration = 0;
  double cum_beta1 = 1.0;
};

/// x += step * g
void sgd_step(std::vector<double>& x, std::span<const double> g, double step);

/// x += step * sqrt(1 - b2^t) / (1 - b1^t) * m / (sqrt(v) + eps)
void adam_step(AdamState& state, std::vector<double>& x, std::span<const double> g, double step,
               const MomentParams& p = {});

/// Adam with Nesterov momentum and the momentum schedule
/// b1_t = b1 (1 - 0.5 * 0.96^(t * schedule_decay)).
void nadam_step(NadamState& state, std::vector<double>& x, std::span<const double> g, double step,
                const MomentParams& p = {}, double schedule_decay = 0.004);

// ---------------------------------------------------------------------------
// Gradient-free optimizers

/// Objective of one batch at a point; nullopt once the budget is exhausted.
using Evaluator = std::function<std::optional<double>(std::span<const double>)>;

struct SpsaParams {
  double alpha = 0.602;  // step gain decay
  double gamma = 0.101;  // perturbation gain decay
  double stability = 10.0;  // A in a_k = a / (k + 1 + A)^alpha
  double perturbation = 0.1;  // c in c_k = c * scale / (k + 1)^gamma
};

/// Per-coordinate simultaneous-perturbation estimate (f+ - f-) / (2 c delta_i).
std::vector<double> spsa_estimate(double f_plus, double f_minus, double c, std::span<const double> delta);

class Spsa {
 public:
  Spsa(std::vector<double> x0, double step, double scale, std::uint64_t seed, SpsaParams p = {});
  /// Two evaluations and one ascent step; false when the budget ran out.
  bool iterate(const Evaluator& f);
  const std::vector<double>& x() const { return x_; }
  long iteration() const { return k_; }

 private:
  std::vector<double> x_;
  double step_;
  double scale_;
  SpsaParams p_;
  std::mt19937_64 rng_;
  long k_ = 0;
};

struct AnnealingParams {
  /// Starting temperature; when unset, 1% of |f(x0)| plus one.
  std::optional<double> initial_temperature;
  double cooling = 0.95;  // geometric factor per proposal
};

class SimulatedAnnealing {
 public:
  /// Gaussian proposals with standard deviation step * scale.
  SimulatedAnnealing(std::vector<double> x0, double f0, double step, double scale, std::uint64_t seed,
                     AnnealingParams p = {});
  bool iterate(const Evaluator& f);
  const std::vector<double>& x() const { return x_; }
  double value() const { return f_; }
  double temperature() const { return temperature_; }

 private:
  std::vector<double> x_;
  double f_;
  double sigma_;
  double cooling_;
  double temperature_;
  std::mt19937_64 rng_;
};

struct EvolutionParams {
  std::size_t population = 50;
  double differential_weight = 0.8;  // DE: F
  double crossover_rate = 0.6;  // DE: CR
  double select_fraction = 0.2;  // CNE: surviving elite
  double mutation_probability = 0.1;  // CNE: per coordinate
};

/// Member 0 is x0; the others start at x0 plus N(0, (step * scale)^2) noise.
class DifferentialEvolution {
 public:
  DifferentialEvolution(std::vector<double> x0, double f0, double step, double scale, std::uint64_t seed,
                        EvolutionParams p = {});
  /// Evaluates the initial population on the first call, then one rand/1/bin
  /// generation per call.
  bool iterate(const Evaluator& f);
  const std::vector<std::vector<double>>& population() const { return population_; }
  const std::vector<double>& fitness() const { return fitness_; }

 private:
  EvolutionParams p_;
  std::mt19937_64 rng_;
  std::vector<std::vector<double>> population_;
  std::vector<double> fitness_;
  std::size_t initialized_ = 1;
};

/// Truncation selection, uniform crossover between elite parents and
/// per-coordinate Gaussian mutation of size step * scale.
class NeuroEvolution {
 public:
  NeuroEvolution(std::vector<double> x0, double f0, double step, double scale, std::uint64_t seed,
                 EvolutionParams p = {});
  bool iterate(const Evaluator& f);
  const std::vector<std::vector<double>>& population() const { return population_; }
  const std::vector<double>& fitness() const { return fitness_; }

 private:
  EvolutionParams p_;
  double sigma_;
  std::mt19937_64 rng_;
  std::vector<std::vector<double>> population_;
  std::vector<double> fitness_;
  std::size_t initialized_ = 1;
};

}  // namespace diffsim::optim
