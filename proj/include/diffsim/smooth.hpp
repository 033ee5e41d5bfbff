#pragma once

// Differentiable surrogates for discrete control flow. Every block is a
// template over the scalar type so it works on plain doubles (no recording)
// and on ad::Var (recorded on the operand's tape).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "diffsim/ad.hpp"

namespace diffsim::smooth {

using ad::value;

struct SmoothConfig {
  double k = 32.0;    // logistic steepness
  double eps = 0.25;  // attribute-match half-width, in the attribute's units

  /// Throws std::invalid_argument unless k > 0, eps > 0 and k * eps >= 8.
  void validate() const;
};

inline void SmoothConfig::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("smooth.k must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("smooth.eps must be positive");
  if (k * eps < 8.0) throw std::invalid_argument("smooth.k * smooth.eps must be at least 8");
}

/// Smooth threshold for x >= x0.
template <class R>
R logistic(const R& x, double x0, double k) {
  return ad::logistic(x, x0, k);
}

/// cond * a + (1 - cond) * b; reproduces a / b exactly for cond 1 / 0.
template <class R>
R smooth_branch(const R& cond, const R& a, const R& b) {
  return cond * a + (R(1.0) - cond) * b;
}

template <class R>
R masked_accumulate(std::span<const R> values, std::span<const R> masks) {
  if (values.size() != masks.size()) {
    throw std::invalid_argument("masked_accumulate: length mismatch");
  }
  R sum(0.0);
  for (std::size_t i = 0; i < values.size(); ++i) sum = sum + masks[i] * values[i];
  return sum;
}

/// -log(sum_i exp(-x_i)), evaluated around the (detached) minimum so the
/// exponentials never overflow. Lies in [min - ln n, min].
template <class R>
R smooth_min(std::span<const R> xs) {
  if (xs.empty()) throw std::invalid_argument("smooth_min: empty sequence");
  if (xs.size() == 1) return xs[0];
  double shift = value(xs[0]);
  for (const R& x : xs) shift = std::min(shift, value(x));
  using std::exp;
  using std::log;
  R sum(0.0);
  for (const R& x : xs) sum = sum + exp(R(shift) - x);
  return R(shift) - log(sum);
}

template <class R>
R smooth_max(std::span<const R> xs) {
  std::vector<R> negated;
  negated.reserve(xs.size());
  for (const R& x : xs) negated.push_back(-x);
  return -smooth_min<R>(negated);
}

template <class R>
R smooth_min(std::initializer_list<R> xs) {
  return smooth_min<R>(std::span<const R>(xs.begin(), xs.size()));
}

template <class R>
R smooth_max(std::initializer_list<R> xs) {
  return smooth_max<R>(std::span<const R>(xs.begin(), xs.size()));
}

/// ~1 for lo < x < hi, ~0 outside.
template <class R>
R in_range(const R& x, double lo, double hi, double k) {
  if (!(lo < hi)) throw std::invalid_argument("in_range: lo must be below hi");
  return logistic(x, lo, k) * (R(1.0) - logistic(x, hi, k));
}

/// One matching key of a select-by-attribute query.
template <class R>
struct AttributeKey {
  std::span<const R> refs;
  R ref_value;
};

/// Sum of targets[i] masked by the joint near-equality of all keys. With a
/// unique match this is ~targets[match]; with none it is ~0.
template <class R>
R select_by_attribute(std::span<const AttributeKey<R>> keys, std::span<const R> targets,
                      const SmoothConfig& cfg) {
  for (const auto& key : keys) {
    if (key.refs.size() != targets.size()) {
      throw std::invalid_argument("select_by_attribute: length mismatch");
    }
  }
  R sum(0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    R mask(1.0);
    for (const auto& key : keys) {
      mask = mask * in_range<R>(key.refs[i] - key.ref_value, -cfg.eps, cfg.eps, cfg.k);
    }
    sum = sum + targets[i] * mask;
  }
  return sum;
}

template <class R>
R select_by_attribute(std::span<const R> refs, const R& ref_value, std::span<const R> targets,
                      const SmoothConfig& cfg) {
  const AttributeKey<R> key{refs, ref_value};
  return select_by_attribute<R>(std::span<const AttributeKey<R>>(&key, 1), targets, cfg);
}

/// l_k(sin(pi t / p)): ~1 on [0, p), ~0 on [p, 2p), period 2p.
template <class R, class P>
R periodic_step(const R& t, const P& p, double k) {
  if (!(value(p) > 0.0)) throw std::invalid_argument("periodic_step: period must be positive");
  using std::sin;
  return logistic(R(sin(t * std::numbers::pi / p)), 0.0, k);
}

// Smooth one-shot timers. A timer holds the remaining delay; it fires once
// the delay has run out.

template <class R>
R timer_init(const R& delay) {
  return delay;
}

template <class R>
R timer_tick(const R& timer, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("timer_tick: tau must be positive");
  return timer - R(tau);
}

template <class R>
R timer_expired(const R& timer, double k) {
  return logistic(R(-timer), 0.0, k);
}

/// A timer value that never fires before `end_time`.
inline double timer_sentinel(double end_time) { return end_time + 1.0; }

}  // namespace diffsim::smooth
