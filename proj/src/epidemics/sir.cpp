#include "diffsim/epidemics/sir.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "diffsim/prn.hpp"

namespace diffsim::epidemics {

namespace {

/// Counter word reserved for draws that happen before the first step.
constexpr std::uint32_t kInitialDraw = std::numeric_limits<std::uint32_t>::max();

template <class R>
void check_inputs(const EpidemicInputs<R>& inputs, const ContactGraph& graph) {
  if (inputs.location_coefficients.size() != graph.nodes()) {
    throw std::invalid_argument("need one infection coefficient per graph node");
  }
  if (!(ad::value(inputs.recovery_rate) > 0.0)) throw std::invalid_argument("recovery rate must be positive");
}

/// Probabilities below this are treated as impossible on the log scale.
constexpr double kMinLogProbability = 1e-300;

}  // namespace

template <class Ops>
typename Ops::Real chance(const typename Ops::Real& p, double u, ThresholdScale scale, const Ops& ops) {
  using R = typename Ops::Real;
  if (scale == ThresholdScale::Linear) return ops.above(R(p - u), 0.0);
  using std::log;
  return ops.above(R(log(ad::floor_at(p, R(kMinLogProbability)))), std::log(u));
}

void SirConfig::validate() const {
  smooth.validate();
  if (agents < 1) throw std::invalid_argument("need at least one agent");
  if (steps < 0) throw std::invalid_argument("step count must be nonnegative");
}

template <class Ops>
SirState<typename Ops::Real> init_agents(const SirConfig& cfg, const ContactGraph& graph,
                                         const EpidemicInputs<typename Ops::Real>& inputs,
                                         std::uint64_t seed, const Ops& ops) {
  using R = typename Ops::Real;
  cfg.validate();
  check_inputs(inputs, graph);
  const prn::KeyedStream infection(seed, prn::Stream::InitialInfection);
  const prn::KeyedStream recovery(seed, prn::Stream::Recovery);
  const prn::KeyedStream movement(seed, prn::Stream::Movement);
  const double sentinel = smooth::timer_sentinel(cfg.steps);

  SirState<R> s;
  const auto n = static_cast<std::size_t>(cfg.agents);
  s.susceptible.reserve(n);
  s.infected.reserve(n);
  s.recovered.assign(n, R(0.0));
  s.timer.reserve(n);
  s.location.reserve(n);
  for (std::uint32_t a = 0; a < n; ++a) {
    const R infected = chance(inputs.initial_infection_prob, infection.uniform(a), cfg.threshold, ops);
    const R delay = recovery_delay(recovery.uniform(a, kInitialDraw), inputs.recovery_rate);
    s.susceptible.push_back(R(1.0) - infected);
    s.infected.push_back(infected);
    s.timer.push_back(ops.branch(infected, smooth::timer_init(delay), R(sentinel)));
    s.location.push_back(static_cast<std::uint32_t>(movement.bits(a, kInitialDraw) % graph.nodes()));
  }
  return s;
}

template <class Ops>
void step_sir(SirState<typename Ops::Real>& s, const ContactGraph& graph,
              const EpidemicInputs<typename Ops::Real>& inputs, const SirConfig& cfg,
              std::uint64_t seed, const Ops& ops) {
  using R = typename Ops::Real;
  check_inputs(inputs, graph);
  const prn::KeyedStream contact(seed, prn::Stream::Contact);
  const prn::KeyedStream recovery(seed, prn::Stream::Recovery);
  const prn::KeyedStream movement(seed, prn::Stream::Movement);
  const auto step = static_cast<std::uint32_t>(s.step);
  const std::size_t n = s.location.size();

  // Occupants of every node, rebuilt each step.
  std::vector<std::vector<std::uint32_t>> occupants(graph.nodes());
  for (std::uint32_t a = 0; a < n; ++a) occupants[s.location[a]].push_back(a);

  std::vector<R> infection(n), recovery_now(n), timer(n);
  for (std::uint32_t a = 0; a < n; ++a) {
    const R& p = inputs.location_coefficients[s.location[a]];
    R escape(1.0);
    for (std::uint32_t j : occupants[s.location[a]]) {
      if (j == a) continue;
      const R transmit = s.infected[j] * chance(p, contact.uniform(a, j, step), cfg.threshold, ops);
      escape = escape * (R(1.0) - transmit);
    }
    infection[a] = s.susceptible[a] * (R(1.0) - escape);
    const R ticked = smooth::timer_tick(s.timer[a], 1.0);
    recovery_now[a] = s.infected[a] * ops.above(R(-ticked), 0.0);
    const R delay = recovery_delay(recovery.uniform(a, step), inputs.recovery_rate);
    timer[a] = ops.branch(infection[a], delay, ticked);
  }
  for (std::uint32_t a = 0; a < n; ++a) {
    s.susceptible[a] = s.susceptible[a] - infection[a];
    s.infected[a] = s.infected[a] + infection[a] - recovery_now[a];
    s.recovered[a] = s.recovered[a] + recovery_now[a];
    s.timer[a] = timer[a];
    const auto& nbrs = graph.adjacency[s.location[a]];
    s.location[a] = nbrs[movement.bits(a, step) % nbrs.size()];
  }
  ++s.step;
}

template <class R>
SirCounts<R> counts(const SirState<R>& s) {
  SirCounts<R> c{R(0.0), R(0.0), R(0.0)};
  for (std::size_t a = 0; a < s.location.size(); ++a) {
    c.susceptible = c.susceptible + s.susceptible[a];
    c.infected = c.infected + s.infected[a];
    c.recovered = c.recovered + s.recovered[a];
  }
  return c;
}

template <class Ops>
std::vector<SirCounts<typename Ops::Real>> run_sir(const SirConfig& cfg, const ContactGraph& graph,
                                                   const EpidemicInputs<typename Ops::Real>& inputs,
                                                   std::uint64_t seed, const Ops& ops,
                                                   SirState<typename Ops::Real>* final_state) {
  using R = typename Ops::Real;
  SirState<R> s = init_agents(cfg, graph, inputs, seed, ops);
  std::vector<SirCounts<R>> rows;
  rows.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  rows.push_back(counts(s));
  for (int t = 0; t < cfg.steps; ++t) {
    step_sir(s, graph, inputs, cfg, seed, ops);
    rows.push_back(counts(s));
  }
  if (final_state) *final_state = std::move(s);
  return rows;
}

template <class R>
std::vector<Health> attribute(const SirState<R>& s) {
  std::vector<Health> out(s.location.size());
  for (std::size_t a = 0; a < out.size(); ++a) {
    const double sv = ad::value(s.susceptible[a]);
    const double iv = ad::value(s.infected[a]);
    const double rv = ad::value(s.recovered[a]);
    Health h = Health::Susceptible;
    double best = sv;
    if (iv > best) {
      h = Health::Infected;
      best = iv;
    }
    if (rv > best) h = Health::Recovered;
    out[a] = h;
  }
  return out;
}

double state_mismatch(std::span<const Health> a, std::span<const Health> b) {
  if (a.size() != b.size()) throw std::invalid_argument("state_mismatch: agent count mismatch");
  if (a.empty()) return 0.0;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i] ? 1 : 0;
  return static_cast<double>(differ) / static_cast<double>(a.size());
}

template <class R>
R calibration_loss(std::span<const SirCounts<R>> run, std::span<const SirCounts<double>> reference) {
  if (run.size() != reference.size()) throw std::invalid_argument("calibration_loss: length mismatch");
  R loss(0.0);
  for (std::size_t t = 0; t < run.size(); ++t) {
    const R ds = run[t].susceptible - reference[t].susceptible;
    const R di = run[t].infected - reference[t].infected;
    const R dr = run[t].recovered - reference[t].recovered;
    loss = loss + ds * ds + di * di + dr * dr;
  }
  return loss;
}

void write_counts_csv(std::ostream& out, std::span<const SirCounts<double>> rows) {
  out << "step,S_count,I_count,R_count\n";
  char buf[128];
  for (std::size_t t = 0; t < rows.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", t, rows[t].susceptible, rows[t].infected,
                  rows[t].recovered);
    out << buf;
  }
}

#define DIFFSIM_INSTANTIATE(OPS)                                                                   \
  template OPS::Real chance<OPS>(const OPS::Real&, double, ThresholdScale, const OPS&);            \
  template SirState<OPS::Real> init_agents<OPS>(const SirConfig&, const ContactGraph&,             \
                                                const EpidemicInputs<OPS::Real>&, std::uint64_t,   \
                                                const OPS&);                                       \
  template void step_sir<OPS>(SirState<OPS::Real>&, const ContactGraph&,                           \
                              const EpidemicInputs<OPS::Real>&, const SirConfig&, std::uint64_t,   \
                              const OPS&);                                                         \
  template std::vector<SirCounts<OPS::Real>> run_sir<OPS>(const SirConfig&, const ContactGraph&,   \
                                                          const EpidemicInputs<OPS::Real>&,        \
                                                          std::uint64_t, const OPS&,               \
                                                          SirState<OPS::Real>*);

DIFFSIM_INSTANTIATE(SmoothOps<Var>)
DIFFSIM_INSTANTIATE(SmoothOps<double>)
DIFFSIM_INSTANTIATE(CrispOps)

#undef DIFFSIM_INSTANTIATE

template SirCounts<Var> counts<Var>(const SirState<Var>&);
template SirCounts<double> counts<double>(const SirState<double>&);
template std::vector<Health> attribute<Var>(const SirState<Var>&);
template std::vector<Health> attribute<double>(const SirState<double>&);
template Var calibration_loss<Var>(std::span<const SirCounts<Var>>, std::span<const SirCounts<double>>);
template double calibration_loss<double>(std::span<const SirCounts<double>>,
                                         std::span<const SirCounts<double>>);

}  // namespace diffsim::epidemics
