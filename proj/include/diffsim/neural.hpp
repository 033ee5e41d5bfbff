#pragma once

// Single-hidden-layer tanh network evaluated on the AD tape.
//
// Coefficient layout (flat, in this order):
//   input->hidden weights, row-major [hidden][input]
//   hidden biases                      [hidden]
//   hidden->output weights, row-major [output][hidden]
//   output biases                      [output]

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/ad.hpp"

namespace diffsim::neural {

/// Inputs per intersection: 4 incoming roads x 3 lanes x 5 nearest vehicles.
inline constexpr std::size_t kInputsPerIntersection = 60;

struct NetSpec {
  std::size_t n_in = 0;
  std::size_t n_hidden = 0;
  std::size_t n_out = 0;

  std::size_t coefficient_count() const { return (n_in + 1) * n_hidden + (n_hidden + 1) * n_out; }

  /// Controller for `intersections` signals with `hidden` hidden neurons.
  static NetSpec for_grid(std::size_t intersections, std::size_t hidden);
};

/// (60 i + 1) h + (h + 1) i.
std::size_t coefficient_count(std::size_t intersections, std::size_t hidden);

template <class R>
std::vector<R> forward(const NetSpec& spec, std::span<const R> params, std::span<const R> inputs) {
  if (params.size() != spec.coefficient_count()) {
    throw std::invalid_argument("neural::forward: coefficient count mismatch");
  }
  if (inputs.size() != spec.n_in) throw std::invalid_argument("neural::forward: input length mismatch");
  using std::tanh;

  const std::size_t hidden_bias = spec.n_in * spec.n_hidden;
  const std::size_t out_weights = hidden_bias + spec.n_hidden;
  const std::size_t out_bias = out_weights + spec.n_hidden * spec.n_out;

  std::vector<R> hidden;
  hidden.reserve(spec.n_hidden);
  for (std::size_t h = 0; h < spec.n_hidden; ++h) {
    R sum = params[hidden_bias + h];
    const R* w = params.data() + h * spec.n_in;
    for (std::size_t i = 0; i < spec.n_in; ++i) sum = sum + w[i] * inputs[i];
    hidden.push_back(tanh(sum));
  }
  std::vector<R> out;
  out.reserve(spec.n_out);
  for (std::size_t o = 0; o < spec.n_out; ++o) {
    R sum = params[out_bias + o];
    const R* w = params.data() + out_weights + o * spec.n_hidden;
    for (std::size_t h = 0; h < spec.n_hidden; ++h) sum = sum + w[h] * hidden[h];
    out.push_back(tanh(sum));
  }
  return out;
}

/// Coefficients drawn i.i.d. from N(0, 1); deterministic in `seed`.
std::vector<double> init_standard_normal(const NetSpec& spec, std::uint64_t seed);

/// Plain text: n_in, n_hidden, n_out on the first three lines, then one
/// coefficient per line in layout order.
void write_coefficients(std::ostream& out, const NetSpec& spec, std::span<const double> params);
std::vector<double> read_coefficients(std::istream& in, NetSpec& spec);

}  // namespace diffsim::neural
