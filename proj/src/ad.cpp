#include "diffsim/ad.hpp"

#include <algorithm>
#include <sstream>

namespace diffsim::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::PowConst: return "pow";
    case Op::Sqrt: return "sqrt";
    case Op::Tanh: return "tanh";
    case Op::Logistic: return "logistic";
  }
  return "unknown";
}

namespace {

std::string domain_message(Op op, double argument) {
  std::ostringstream out;
  out << "domain error in " << op_name(op) << " (argument " << argument << ")";
  return out.str();
}

Var unary(Op op, const Var& a, double value, double partial) {
  if (a.is_constant()) return Var(value);
  Tape* tape = a.tape();
  return make_var(tape, tape->record(op, value, a.index(), partial), value);
}

Var binary(Op op, const Var& a, const Var& b, double value, double da, double db) {
  if (a.is_constant()) {
    if (b.is_constant()) return Var(value);
    Tape* tape = b.tape();
    return make_var(tape, tape->record(op, value, b.index(), db), value);
  }
  Tape* tape = a.tape();
  if (b.is_constant()) return make_var(tape, tape->record(op, value, a.index(), da), value);
  if (b.tape() != tape) throw std::logic_error("operands recorded on different tapes");
  return make_var(tape, tape->record(op, value, a.index(), da, b.index(), db), value);
}

}  // namespace

DomainError::DomainError(Op op, double argument)
    : std::runtime_error(domain_message(op, argument)), op_(op), argument_(argument) {}

Var make_var(Tape* tape, std::int32_t index, double value) { return Var(tape, index, value); }

std::int32_t Tape::record(Op op, double value, std::int32_t p0, double d0, std::int32_t p1,
                          double d1) {
  const auto index = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{value, {d0, d1}, {p0, p1}});
  kinds_.push_back(op);
  return index;
}

Var Tape::new_input(double value) {
  const std::int32_t index = record(Op::Input, value, -1, 0.0);
  inputs_.push_back(index);
  return Var(this, index, value);
}

void Tape::reset() {
  nodes_.clear();
  kinds_.clear();
  inputs_.clear();
  visits_ = 0;
}

std::size_t Tape::capacity_bytes() const noexcept {
  return nodes_.capacity() * sizeof(Node) + kinds_.capacity() * sizeof(Op) +
         inputs_.capacity() * sizeof(std::int32_t) + adjoints_.capacity() * sizeof(double);
}

Gradient Tape::backward(const Var& output) {
  std::vector<double> result(inputs_.size(), 0.0);
  visits_ = 0;
  if (output.is_constant()) return Gradient(inputs_, std::move(result));
  if (output.tape() != this) throw std::logic_error("output recorded on a different tape");

  const auto last = static_cast<std::size_t>(output.index());
  adjoints_.assign(last + 1, 0.0);
  adjoints_[last] = 1.0;
  for (std::size_t i = last + 1; i-- > 0;) {
    const double adjoint = adjoints_[i];
    if (adjoint == 0.0) continue;
    ++visits_;
    const Node& n = nodes_[i];
    if (n.parent[0] >= 0) adjoints_[n.parent[0]] += n.partial[0] * adjoint;
    if (n.parent[1] >= 0) adjoints_[n.parent[1]] += n.partial[1] * adjoint;
  }
  for (std::size_t k = 0; k < inputs_.size(); ++k) {
    const auto node = static_cast<std::size_t>(inputs_[k]);
    if (node <= last) result[k] = adjoints_[node];
  }
  return Gradient(inputs_, std::move(result));
}

double Gradient::operator[](const Var& input) const {
  if (input.is_constant()) return 0.0;
  auto it = std::lower_bound(input_nodes_.begin(), input_nodes_.end(), input.index());
  if (it == input_nodes_.end() || *it != input.index()) return 0.0;
  return adjoints_[static_cast<std::size_t>(it - input_nodes_.begin())];
}

Var& Var::operator+=(const Var& rhs) { return *this = *this + rhs; }
Var& Var::operator-=(const Var& rhs) { return *this = *this - rhs; }
Var& Var::operator*=(const Var& rhs) { return *this = *this * rhs; }
Var& Var::operator/=(const Var& rhs) { return *this = *this / rhs; }

Var operator+(const Var& a, const Var& b) {
  return binary(Op::Add, a, b, a.value() + b.value(), 1.0, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  return binary(Op::Sub, a, b, a.value() - b.value(), 1.0, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  return binary(Op::Mul, a, b, a.value() * b.value(), b.value(), a.value());
}

Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) throw DomainError(Op::Div, b.value());
  const double inv = 1.0 / b.value();
  const double q = a.value() / b.value();
  return binary(Op::Div, a, b, q, inv, -q * inv);
}

Var operator-(const Var& a) { return unary(Op::Neg, a, -a.value(), -1.0); }

Var sin(const Var& a) { return unary(Op::Sin, a, std::sin(a.value()), std::cos(a.value())); }

Var cos(const Var& a) { return unary(Op::Cos, a, std::cos(a.value()), -std::sin(a.value())); }

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return unary(Op::Exp, a, e, e);
}

Var log(const Var& a) {
  if (!(a.value() > 0.0)) throw DomainError(Op::Log, a.value());
  return unary(Op::Log, a, std::log(a.value()), 1.0 / a.value());
}

Var sqrt(const Var& a) {
  if (!(a.value() > 0.0)) throw DomainError(Op::Sqrt, a.value());
  const double r = std::sqrt(a.value());
  return unary(Op::Sqrt, a, r, 0.5 / r);
}

Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return unary(Op::Tanh, a, t, 1.0 - t * t);
}

Var pow(const Var& a, double exponent) {
  if (exponent == 2.0) {
    return unary(Op::PowConst, a, a.value() * a.value(), 2.0 * a.value());
  }
  const double p = std::pow(a.value(), exponent);
  const double d = exponent * std::pow(a.value(), exponent - 1.0);
  return unary(Op::PowConst, a, p, d);
}

double logistic(double x, double x0, double k) {
  const double z = k * (x - x0);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Var logistic(const Var& x, double x0, double k) {
  const double s = logistic(x.value(), x0, k);
  return unary(Op::Logistic, x, s, k * s * (1.0 - s));
}

}  // namespace diffsim::ad
