#pragma once

// Finite-difference helpers shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testing {

/// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double plus = f(x);
  x[i] = x0 - h;
  const double minus = f(x);
  return (plus - minus) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor)
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
