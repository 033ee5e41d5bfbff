#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "diffsim/ad.hpp"
#include "fd.hpp"

using namespace diffsim;
using Catch::Approx;

TEST_CASE("new_input registers distinct inputs", "[ad]") {
  Tape t;
  const Var x = t.new_input(1.0);
  const Var y = t.new_input(2.0);
  CHECK(x.value() == 1.0);
  CHECK(x.index() != y.index());
  CHECK(t.input_count() == 2);

  const Var f = x * 3.0;
  const ad::Gradient g = t.backward(f);
  REQUIRE(g.size() == 2);
  CHECK(g[x] == 3.0);
  CHECK(g[y] == 0.0);  // unused input
}

TEST_CASE("primitives record primal values and local partials", "[ad]") {
  Tape t;
  const Var x = t.new_input(3.0);
  const Var y = t.new_input(4.0);

  const Var p = x * y;
  CHECK(p.value() == 12.0);
  const ad::Node& mul = t.node(static_cast<std::size_t>(p.index()));
  CHECK(t.kind(static_cast<std::size_t>(p.index())) == ad::Op::Mul);
  CHECK(mul.partial[0] == 4.0);
  CHECK(mul.partial[1] == 3.0);

  const Var v4 = x * x * y;
  const Var v5 = sin(v4);
  CHECK(t.node(static_cast<std::size_t>(v5.index())).partial[0] == std::cos(v4.value()));

  Tape t2;
  const Var z = t2.new_input(0.0);
  const Var e = exp(z);
  CHECK(e.value() == 1.0);
  CHECK(t2.node(static_cast<std::size_t>(e.index())).partial[0] == 1.0);
}

TEST_CASE("gradient of sin(x^2 y) matches the closed forms", "[ad]") {
  Tape t;
  const Var x = t.new_input(1.0);
  const Var y = t.new_input(2.0);
  const Var f = sin(x * x * y);
  const ad::Gradient g = t.backward(f);
  // Reference values evaluated independently: sin(2), 4 cos(2), cos(2).
  CHECK(f.value() == Approx(0.90929742682568171).epsilon(1e-15));
  CHECK(g[x] == Approx(-1.6645873461885696).epsilon(1e-14));
  CHECK(g[y] == Approx(-0.41614683654714241).epsilon(1e-14));
  CHECK(f.value() == Approx(0.9093).margin(5e-5));
  CHECK(g[x] == Approx(-1.6646).margin(5e-5));
  CHECK(g[y] == Approx(-0.4161).margin(5e-5));
}

TEST_CASE("identity output has unit gradient", "[ad]") {
  Tape t;
  const Var x = t.new_input(7.5);
  CHECK(t.backward(x)[x] == 1.0);
}

TEST_CASE("detach cuts the gradient path", "[ad]") {
  Tape t;
  const Var five = t.new_input(5.0);
  CHECK(ad::detach(five) == 5.0);

  const Var x = t.new_input(2.5);
  const Var out = x * ad::detach(x);
  CHECK(t.backward(out)[x] == 2.5);  // only one factor carries sensitivity

  // A branch decided on a detached value contributes nothing itself.
  const Var y = t.new_input(1.0);
  const Var z = ad::detach(y) > 0.0 ? x * 2.0 : x * 3.0;
  CHECK(t.backward(z)[y] == 0.0);
}

TEST_CASE("reset reproduces node count, keeps capacity and gradients", "[ad]") {
  Tape t;
  auto build = [&] {
    const Var a = t.new_input(0.3);
    const Var b = t.new_input(-1.2);
    const Var f = tanh(a * b) + exp(a) / (b * b + 1.0);
    return std::pair{f, t.backward(f)};
  };
  const auto [f1, g1] = build();
  const std::size_t nodes = t.size();
  const std::size_t capacity = t.capacity_bytes();
  t.reset();
  CHECK(t.size() == 0);
  CHECK(t.capacity_bytes() == capacity);
  const auto [f2, g2] = build();
  CHECK(t.size() == nodes);
  CHECK(f1.value() == f2.value());
  CHECK(g1.at(0) == g2.at(0));
  CHECK(g1.at(1) == g2.at(1));
}

TEST_CASE("domain violations abort with the offending op", "[ad]") {
  Tape t;
  const Var zero = t.new_input(0.0);
  const Var neg = t.new_input(-1.0);
  const Var one = t.new_input(1.0);
  CHECK_THROWS_AS(log(zero), ad::DomainError);
  CHECK_THROWS_AS(sqrt(neg), ad::DomainError);
  CHECK_THROWS_AS(one / zero, ad::DomainError);
  try {
    (void)log(neg);
    FAIL("log of a negative number must throw");
  } catch (const ad::DomainError& e) {
    CHECK(e.op() == ad::Op::Log);
    CHECK(e.argument() == -1.0);
  }
}

TEST_CASE("operands from different tapes are rejected", "[ad]") {
  Tape a, b;
  const Var x = a.new_input(1.0);
  const Var y = b.new_input(1.0);
  CHECK_THROWS_AS(x + y, std::logic_error);
}

TEST_CASE("constants are folded without recording", "[ad]") {
  const Var a = 2.0;
  const Var b = sin(a) * 3.0 + pow(a, 4.0);
  CHECK(b.is_constant());
  CHECK(b.value() == std::sin(2.0) * 3.0 + 16.0);
  Tape t;
  const Var x = t.new_input(1.0);
  CHECK(t.backward(b).size() == 1);
  CHECK(t.backward(b).at(0) == 0.0);
  (void)x;
}

namespace {

using Unary = std::function<Var(const Var&)>;
using Binary = std::function<Var(const Var&, const Var&)>;

double unary_fd_error(const Unary& f, double x0) {
  Tape t;
  const Var x = t.new_input(x0);
  const double ad = t.backward(f(x))[x];
  const double fd = testing::central_difference(
      [&](const std::vector<double>& v) { return f(Var(v[0])).value(); }, {x0}, 0, 1e-6);
  return testing::rel_err(ad, fd);
}

}  // namespace

TEST_CASE("every primitive matches central finite differences", "[ad][fd]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> any(-3.0, 3.0);
  std::uniform_real_distribution<double> positive(0.2, 5.0);
  const std::vector<std::pair<const char*, Unary>> unary{
      {"neg", [](const Var& x) { return -x; }},
      {"sin", [](const Var& x) { return sin(x); }},
      {"cos", [](const Var& x) { return cos(x); }},
      {"exp", [](const Var& x) { return exp(x); }},
      {"tanh", [](const Var& x) { return tanh(x); }},
      {"pow4", [](const Var& x) { return pow(x, 4.0); }},
      {"pow2", [](const Var& x) { return pow(x, 2.0); }},
      // Within ~1 of its centre, where the slope is not lost in roundoff.
      {"logistic", [](const Var& x) { return ad::logistic(x, 0.3, 4.0 / 3.0); }},
  };
  const std::vector<std::pair<const char*, Unary>> positive_only{
      {"log", [](const Var& x) { return log(x); }},
      {"sqrt", [](const Var& x) { return sqrt(x); }},
      {"pow_frac", [](const Var& x) { return pow(x, 2.5); }},
  };
  const std::vector<std::pair<const char*, Binary>> binary{
      {"add", [](const Var& a, const Var& b) { return a + b; }},
      {"sub", [](const Var& a, const Var& b) { return a - b; }},
      {"mul", [](const Var& a, const Var& b) { return a * b; }},
      {"div", [](const Var& a, const Var& b) { return a / (b * b + 0.5); }},
  };
  for (int trial = 0; trial < 50; ++trial) {
    for (const auto& [name, f] : unary) {
      INFO(name);
      CHECK(unary_fd_error(f, any(rng)) <= 1e-6);
    }
    for (const auto& [name, f] : positive_only) {
      INFO(name);
      CHECK(unary_fd_error(f, positive(rng)) <= 1e-6);
    }
    for (const auto& [name, f] : binary) {
      INFO(name);
      const std::vector<double> p{any(rng), any(rng)};
      Tape t;
      const Var a = t.new_input(p[0]);
      const Var b = t.new_input(p[1]);
      const ad::Gradient g = t.backward(f(a, b));
      auto plain = [&](const std::vector<double>& v) { return f(Var(v[0]), Var(v[1])).value(); };
      CHECK(testing::rel_err(g[a], testing::central_difference(plain, p, 0, 1e-6)) <= 1e-6);
      CHECK(testing::rel_err(g[b], testing::central_difference(plain, p, 1, 1e-6)) <= 1e-6);
    }
  }
}

TEST_CASE("backward is a single pass", "[ad]") {
  Tape t;
  std::vector<Var> xs;
  for (int i = 0; i < 20; ++i) xs.push_back(t.new_input(0.1 * i));
  Var acc = 0.0;
  for (const Var& x : xs) acc = acc + sin(x) * x;
  const ad::Gradient g = t.backward(acc);
  CHECK(t.last_backward_visits() <= t.size());
  for (int i = 0; i < 20; ++i) {
    const double x = 0.1 * i;
    CHECK(g.at(static_cast<std::size_t>(i)) == Approx(std::cos(x) * x + std::sin(x)).epsilon(1e-14));
  }
}

TEST_CASE("identical inputs give bit-identical results", "[ad]") {
  auto run = [] {
    Tape t;
    const Var a = t.new_input(0.7);
    const Var b = t.new_input(1.9);
    const Var f = pow(a * b, 4.0) / sqrt(b) + ad::logistic(a - b, 0.0, 32.0);
    const ad::Gradient g = t.backward(f);
    return std::vector<double>{f.value(), g.at(0), g.at(1)};
  };
  CHECK(run() == run());
}
