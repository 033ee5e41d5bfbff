#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape records one node per scalar operation together with the local
// partial derivatives of the result w.r.t. its (at most two) operands.
// backward() replays the record in descending node order and accumulates
// adjoints, yielding d(output)/d(input) for every registered input in a
// single pass.
//
// A Var without a tape is a constant: arithmetic on constants is evaluated
// eagerly and never recorded, so code templated on the scalar type can be
// instantiated with plain doubles or with Var at no semantic difference.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffsim::ad {

enum class Op : std::uint8_t {
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  PowConst,
  Sqrt,
  Tanh,
  Logistic,
};

const char* op_name(Op op);

/// Raised when a primitive is evaluated outside its domain. Aborts the
/// simulation run that triggered it.
class DomainError : public std::runtime_error {
 public:
  DomainError(Op op, double argument);
  Op op() const noexcept { return op_; }
  double argument() const noexcept { return argument_; }

 private:
  Op op_;
  double argument_;
};

struct Node {
  double value;
  double partial[2];
  std::int32_t parent[2];
};

class Var;
class Gradient;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var new_input(double value);

  /// Adjoints of `output` w.r.t. every registered input, in registration
  /// order. A constant output yields an all-zero gradient.
  Gradient backward(const Var& output);

  /// Drops all nodes and inputs; allocated storage is kept for the next run.
  void reset();

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t input_count() const noexcept { return inputs_.size(); }
  std::size_t capacity_bytes() const noexcept;
  /// Nodes whose adjoint was propagated during the last backward().
  std::size_t last_backward_visits() const noexcept { return visits_; }

  const Node& node(std::size_t i) const { return nodes_.at(i); }
  Op kind(std::size_t i) const { return kinds_.at(i); }
  std::span<const std::int32_t> inputs() const noexcept { return inputs_; }

  std::int32_t record(Op op, double value, std::int32_t p0, double d0,
                      std::int32_t p1 = -1, double d1 = 0.0);

 private:
  std::vector<Node> nodes_;
  std::vector<Op> kinds_;
  std::vector<std::int32_t> inputs_;
  std::vector<double> adjoints_;
  std::size_t visits_ = 0;
};

class Var {
 public:
  Var() = default;
  // NOLINTNEXTLINE(google-explicit-constructor): constants mix freely.
  Var(double value) : value_(value) {}

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  std::int32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

  Var& operator+=(const Var& rhs);
  Var& operator-=(const Var& rhs);
  Var& operator*=(const Var& rhs);
  Var& operator/=(const Var& rhs);

 private:
  friend class Tape;
  friend Var make_var(Tape* tape, std::int32_t index, double value);
  Var(Tape* tape, std::int32_t index, double value)
      : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

class Gradient {
 public:
  Gradient() = default;
  Gradient(std::vector<std::int32_t> input_nodes, std::vector<double> adjoints)
      : input_nodes_(std::move(input_nodes)), adjoints_(std::move(adjoints)) {}

  /// Partial derivative w.r.t. a registered input; 0 for constants.
  double operator[](const Var& input) const;
  double at(std::size_t registration_index) const { return adjoints_.at(registration_index); }
  std::size_t size() const noexcept { return adjoints_.size(); }
  std::span<const double> values() const noexcept { return adjoints_; }
  std::span<const std::int32_t> input_nodes() const noexcept { return input_nodes_; }

 private:
  std::vector<std::int32_t> input_nodes_;
  std::vector<double> adjoints_;
};

Var make_var(Tape* tape, std::int32_t index, double value);

/// Primal value; computations on the returned double are invisible to the
/// gradient.
inline double detach(const Var& v) noexcept { return v.value(); }
inline double detach(double v) noexcept { return v; }
inline double value(const Var& v) noexcept { return v.value(); }
inline double value(double v) noexcept { return v; }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var sin(const Var& a);
Var cos(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var tanh(const Var& a);
Var pow(const Var& a, double exponent);

/// 1 / (1 + exp(-k (x - x0))) as a single node.
Var logistic(const Var& x, double x0, double k);
double logistic(double x, double x0, double k);

/// Piecewise selection on a primal predicate: the gradient flows through
/// whichever operand is returned.
template <class R>
inline R select(bool take_first, const R& first, const R& second) {
  return take_first ? first : second;
}

/// max(a, b) where the winner is decided on primal values.
template <class R>
inline R floor_at(const R& x, const R& lo) {
  return value(x) >= value(lo) ? x : lo;
}

bool operator<(const Var& a, const Var& b) = delete;

}  // namespace diffsim::ad

namespace diffsim {
using ad::Tape;
using ad::Var;
}  // namespace diffsim
