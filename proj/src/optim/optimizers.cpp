#include "diffsim/optim/optimizers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diffsim::optim {

namespace {

void check_lengths(std::size_t x, std::size_t g) {
  if (x != g) throw std::invalid_argument("gradient length does not match parameter count");
}

void init_moments(std::vector<double>& m, std::vector<double>& v, std::size_t n) {
  if (m.size() != n) m.assign(n, 0.0);
  if (v.size() != n) v.assign(n, 0.0);
}

std::vector<double> perturbed(const std::vector<double>& x, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y = x;
  for (double& yi : y) yi += sigma * normal(rng);
  return y;
}

/// Population of `size` members around x0; member 0 is x0 itself.
std::vector<std::vector<double>> seed_population(const std::vector<double>& x0, std::size_t size,
                                                 double sigma, std::mt19937_64& rng) {
  if (size < 1) throw std::invalid_argument("population must not be empty");
  std::vector<std::vector<double>> pop;
  pop.reserve(size);
  pop.push_back(x0);
  for (std::size_t i = 1; i < size; ++i) pop.push_back(perturbed(x0, sigma, rng));
  return pop;
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::SGD: return "sgd";
    case Algorithm::Adam: return "adam";
    case Algorithm::Nadam: return "nadam";
    case Algorithm::SPSA: return "spsa";
    case Algorithm::SA: return "sa";
    case Algorithm::DE: return "de";
    case Algorithm::CNE: return "cne";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Algorithm a : {Algorithm::SGD, Algorithm::Adam, Algorithm::Nadam, Algorithm::SPSA, Algorithm::SA,
                      Algorithm::DE, Algorithm::CNE}) {
    if (algorithm_name(a) == lower) return a;
  }
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

bool uses_gradient(Algorithm a) {
  return a == Algorithm::SGD || a == Algorithm::Adam || a == Algorithm::Nadam;
}

void sgd_step(std::vector<double>& x, std::span<const double> g, double step) {
  check_lengths(x.size(), g.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += step * g[i];
}

void adam_step(AdamState& s, std::vector<double>& x, std::span<const double> g, double step,
               const MomentParams& p) {
  check_lengths(x.size(), g.size());
  init_moments(s.m, s.v, x.size());
  ++s.iteration;
  const double t = static_cast<double>(s.iteration);
  const double bias1 = 1.0 - std::pow(p.beta1, t);
  const double bias2 = 1.0 - std::pow(p.beta2, t);
  const double rate = step * std::sqrt(bias2) / bias1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s.m[i] = p.beta1 * s.m[i] + (1.0 - p.beta1) * g[i];
    s.v[i] = p.beta2 * s.v[i] + (1.0 - p.beta2) * g[i] * g[i];
    x[i] += rate * s.m[i] / (std::sqrt(s.v[i]) + p.epsilon);
  }
}

void nadam_step(NadamState& s, std::vector<double>& x, std::span<const double> g, double step,
                const MomentParams& p, double schedule_decay) {
  check_lengths(x.size(), g.size());
  init_moments(s.m, s.v, x.size());
  ++s.iteration;
  const double t = static_cast<double>(s.iteration);
  const double beta1_t = p.beta1 * (1.0 - 0.5 * std::pow(0.96, t * schedule_decay));
  const double beta1_next = p.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * schedule_decay));
  s.cum_beta1 *= beta1_t;
  const double bias1 = 1.0 - s.cum_beta1;
  const double bias2 = 1.0 - std::pow(p.beta2, t);
  const double bias3 = 1.0 - s.cum_beta1 * beta1_next;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s.m[i] = p.beta1 * s.m[i] + (1.0 - p.beta1) * g[i];
    s.v[i] = p.beta2 * s.v[i] + (1.0 - p.beta2) * g[i] * g[i];
    const double direction = (1.0 - beta1_t) / bias1 * g[i] + beta1_next / bias3 * s.m[i];
    x[i] += step * direction * std::sqrt(bias2) / (std::sqrt(s.v[i]) + p.epsilon);
  }
}

std::vector<double> spsa_estimate(double f_plus, double f_minus, double c, std::span<const double> delta) {
  std::vector<double> g(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) g[i] = (f_plus - f_minus) / (2.0 * c * delta[i]);
  return g;
}

Spsa::Spsa(std::vector<double> x0, double step, double scale, std::uint64_t seed, SpsaParams p)
    : x_(std::move(x0)), step_(step), scale_(scale), p_(p), rng_(seed) {}

bool Spsa::iterate(const Evaluator& f) {
  const double k = static_cast<double>(k_);
  const double a_k = step_ / std::pow(k + 1.0 + p_.stability, p_.alpha);
  const double c_k = p_.perturbation * scale_ / std::pow(k + 1.0, p_.gamma);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> delta(x_.size());
  for (double& d : delta) d = coin(rng_) ? 1.0 : -1.0;
  std::vector<double> plus = x_, minus = x_;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    plus[i] += c_k * delta[i];
    minus[i] -= c_k * delta[i];
  }
  const auto f_plus = f(plus);
  if (!f_plus) return false;
  const auto f_minus = f(minus);
  if (!f_minus) return false;
  const std::vector<double> g = spsa_estimate(*f_plus, *f_minus, c_k, delta);
  for (std::size_t i = 0; i < x_.size(); ++i) x_[i] += a_k * g[i];
  ++k_;
  return true;
}

SimulatedAnnealing::SimulatedAnnealing(std::vector<double> x0, double f0, double step, double scale,
                                       std::uint64_t seed, AnnealingParams p)
    : x_(std::move(x0)),
      f_(f0),
      sigma_(step * scale),
      cooling_(p.cooling),
      temperature_(p.initial_temperature.value_or(0.01 * std::abs(f0) + 1.0)),
      rng_(seed) {
  if (temperature_ < 0.0) throw std::invalid_argument("temperature must be nonnegative");
  if (!(cooling_ > 0.0 && cooling_ <= 1.0)) throw std::invalid_argument("cooling factor must lie in (0, 1]");
}

bool SimulatedAnnealing::iterate(const Evaluator& f) {
  std::vector<double> candidate = perturbed(x_, sigma_, rng_);
  const auto fc = f(candidate);
  if (!fc) return false;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng_);
  bool accept = *fc >= f_;
  if (!accept && temperature_ > 0.0) accept = u < std::exp((*fc - f_) / temperature_);
  if (accept) {
    x_ = std::move(candidate);
    f_ = *fc;
  }
  temperature_ *= cooling_;
  return true;
}

DifferentialEvolution::DifferentialEvolution(std::vector<double> x0, double f0, double step, double scale,
                                             std::uint64_t seed, EvolutionParams p)
    : p_(p), rng_(seed) {
  if (p_.population < 4) throw std::invalid_argument("differential evolution needs at least 4 members");
  population_ = seed_population(x0, p_.population, step * scale, rng_);
  fitness_.assign(p_.population, f0);
}

bool DifferentialEvolution::iterate(const Evaluator& f) {
  for (; initialized_ < population_.size(); ++initialized_) {
    const auto fi = f(population_[initialized_]);
    if (!fi) return false;
    fitness_[initialized_] = *fi;
  }
  const std::size_t n = population_.size();
  const std::size_t dim = population_[0].size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, dim == 0 ? 0 : dim - 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a, b, c;
    do a = pick(rng_); while (a == i);
    do b = pick(rng_); while (b == i || b == a);
    do c = pick(rng_); while (c == i || c == a || c == b);
    std::vector<double> trial = population_[i];
    const std::size_t forced = pick_dim(rng_);
    for (std::size_t j = 0; j < dim; ++j) {
      if (j == forced || uniform(rng_) < p_.crossover_rate) {
        trial[j] = population_[a][j] + p_.differential_weight * (population_[b][j] - population_[c][j]);
      }
    }
    const auto ft = f(trial);
    if (!ft) return false;
    if (*ft >= fitness_[i]) {
      population_[i] = std::move(trial);
      fitness_[i] = *ft;
    }
  }
  return true;
}

NeuroEvolution::NeuroEvolution(std::vector<double> x0, double f0, double step, double scale,
                               std::uint64_t seed, EvolutionParams p)
    : p_(p), sigma_(step * scale), rng_(seed) {
  if (p_.population < 2) throw std::invalid_argument("neuro-evolution needs at least 2 members");
  population_ = seed_population(x0, p_.population, sigma_, rng_);
  fitness_.assign(p_.population, f0);
}

bool NeuroEvolution::iterate(const Evaluator& f) {
  for (; initialized_ < population_.size(); ++initialized_) {
    const auto fi = f(population_[initialized_]);
    if (!fi) return false;
    fitness_[initialized_] = *fi;
  }
  const std::size_t n = population_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness_[a] > fitness_[b]; });
  const std::size_t elite = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(p_.select_fraction * static_cast<double>(n))), 1, n);

  std::vector<std::vector<double>> next;
  std::vector<double> next_fitness;
  for (std::size_t r = 0; r < elite; ++r) {
    next.push_back(population_[order[r]]);
    next_fitness.push_back(fitness_[order[r]]);
  }
  std::uniform_int_distribution<std::size_t> pick(0, elite - 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  population_ = next;
  fitness_ = next_fitness;
  while (population_.size() < n) {
    const auto& mum = next[pick(rng_)];
    const auto& dad = next[pick(rng_)];
    std::vector<double> child(mum.size());
    for (std::size_t j = 0; j < child.size(); ++j) {
      child[j] = uniform(rng_) < 0.5 ? mum[j] : dad[j];
      if (uniform(rng_) < p_.mutation_probability) child[j] += sigma_ * normal(rng_);
    }
    const auto fc = f(child);
    if (!fc) return false;
    population_.push_back(std::move(child));
    fitness_.push_back(*fc);
  }
  return true;
}

}  // namespace diffsim::optim
