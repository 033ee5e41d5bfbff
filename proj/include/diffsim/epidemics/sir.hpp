#pragma once

// Agent-based SIR model with movement on a static graph.
//
// Agent health is held as three continuous indicators (susceptible,
// infected, recovered) that always sum to one. Infection by co-located
// agents, initial infection and recovery are expressed with smooth
// thresholds and a smooth timer; movement follows trajectories that are
// fixed by the seed and carries no sensitivity. Instantiated with CrispOps
// the same code is the exact discrete reference model.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "diffsim/epidemics/graph.hpp"
#include "diffsim/ops.hpp"

namespace diffsim::epidemics {

/// Scale on which a uniform draw u is compared with a probability p. Both
/// give the same crisp decision u < p. The linear relaxation l_k(p - u) is
/// blurred over a width of ~1/k in probability units, which is coarse when
/// p itself is small; the log relaxation l_k(ln p - ln u) blurs over a
/// relative width of ~1/k instead.
enum class ThresholdScale { Log, Linear };

struct SirConfig {
  int agents = 1000;
  int steps = 10;
  smooth::SmoothConfig smooth{};
  ThresholdScale threshold = ThresholdScale::Log;

  void validate() const;
};

template <class R>
struct EpidemicInputs {
  R initial_infection_prob{};
  /// Probability per infected contact and step, one per graph node.
  std::vector<R> location_coefficients;
  /// Exponential recovery rate, 1 / steps.
  R recovery_rate{};
};

template <class R>
struct SirState {
  std::vector<R> susceptible;
  std::vector<R> infected;
  std::vector<R> recovered;
  /// Steps until recovery; a sentinel beyond the horizon when not scheduled.
  std::vector<R> timer;
  std::vector<std::uint32_t> location;
  int step = 0;
};

enum class Health : std::uint8_t { Susceptible = 0, Infected = 1, Recovered = 2 };

template <class R>
struct SirCounts {
  R susceptible{};
  R infected{};
  R recovered{};
};

/// Smooth indicator of the event u < p on the configured scale.
template <class Ops>
typename Ops::Real chance(const typename Ops::Real& p, double u, ThresholdScale scale, const Ops& ops);

/// Agent a starts infected with indicator chance(p, u_a) at a uniformly
/// drawn node.
template <class Ops>
SirState<typename Ops::Real> init_agents(const SirConfig& cfg, const ContactGraph& graph,
                                         const EpidemicInputs<typename Ops::Real>& inputs,
                                         std::uint64_t seed, const Ops& ops);

/// One synchronous step: infections and recoveries computed from the
/// start-of-step state, then every agent moves to a neighbouring node.
template <class Ops>
void step_sir(SirState<typename Ops::Real>& state, const ContactGraph& graph,
              const EpidemicInputs<typename Ops::Real>& inputs, const SirConfig& cfg,
              std::uint64_t seed, const Ops& ops);

/// Runs cfg.steps steps; returns the population counts before the first
/// step and after every step (cfg.steps + 1 rows).
template <class Ops>
std::vector<SirCounts<typename Ops::Real>> run_sir(const SirConfig& cfg, const ContactGraph& graph,
                                                   const EpidemicInputs<typename Ops::Real>& inputs,
                                                   std::uint64_t seed, const Ops& ops,
                                                   SirState<typename Ops::Real>* final_state = nullptr);

template <class R>
SirCounts<R> counts(const SirState<R>& state);

/// Largest indicator wins; ties resolve towards susceptible, then infected.
template <class R>
std::vector<Health> attribute(const SirState<R>& state);

/// Fraction of agents attributed to different states.
double state_mismatch(std::span<const Health> a, std::span<const Health> b);

/// Sum over steps of squared count differences (S, I and R).
template <class R>
R calibration_loss(std::span<const SirCounts<R>> run, std::span<const SirCounts<double>> reference);

/// CSV with header `step,S_count,I_count,R_count`.
void write_counts_csv(std::ostream& out, std::span<const SirCounts<double>> rows);

/// Recovery delay by inverse transform sampling: -ln(u) / rate.
template <class R>
R recovery_delay(double u, const R& rate) {
  return R(-std::log(u)) / rate;
}

}  // namespace diffsim::epidemics
