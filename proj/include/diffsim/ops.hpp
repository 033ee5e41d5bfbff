#pragma once

// Model kernels. Agent models are written once against an ops policy:
// SmoothOps<R> substitutes logistic surrogates (R = ad::Var for gradients,
// R = double for untaped evaluation), CrispOps evaluates the exact discrete
// logic of the non-differentiable reference twin.

#include <cmath>
#include <span>

#include "diffsim/smooth.hpp"

namespace diffsim {

template <class R>
struct SmoothOps {
  using Real = R;
  static constexpr bool is_smooth = true;

  smooth::SmoothConfig cfg;

  R above(const R& x, double x0) const { return smooth::logistic(x, x0, cfg.k); }
  R in_range(const R& x, double lo, double hi) const {
    return smooth::in_range(x, lo, hi, cfg.k);
  }
  R branch(const R& cond, const R& a, const R& b) const { return smooth::smooth_branch(cond, a, b); }
  R min(std::span<const R> xs) const { return smooth::smooth_min<R>(xs); }
  R max(std::span<const R> xs) const { return smooth::smooth_max<R>(xs); }
  /// ~1 during the first half of each cycle of length 2 * half_period.
  R periodic(const R& t, double half_period) const {
    return smooth::periodic_step(t, half_period, cfg.k);
  }
  R match(const R& x) const { return smooth::in_range(x, -cfg.eps, cfg.eps, cfg.k); }
};

struct CrispOps {
  using Real = double;
  static constexpr bool is_smooth = false;

  smooth::SmoothConfig cfg;

  double above(double x, double x0) const { return x >= x0 ? 1.0 : 0.0; }
  double in_range(double x, double lo, double hi) const { return lo < x && x < hi ? 1.0 : 0.0; }
  double branch(double cond, double a, double b) const { return cond != 0.0 ? a : b; }
  double min(std::span<const double> xs) const {
    double m = xs[0];
    for (double x : xs) m = x < m ? x : m;
    return m;
  }
  double max(std::span<const double> xs) const {
    double m = xs[0];
    for (double x : xs) m = x > m ? x : m;
    return m;
  }
  double periodic(double t, double half_period) const {
    double phase = std::fmod(t, 2.0 * half_period);
    if (phase < 0.0) phase += 2.0 * half_period;
    return phase < half_period ? 1.0 : 0.0;
  }
  double match(double x) const { return -cfg.eps < x && x < cfg.eps ? 1.0 : 0.0; }
};

}  // namespace diffsim
