#include <numeric>
#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "diffsim/neural.hpp"
#include "fd.hpp"

using namespace diffsim;
using namespace diffsim::neural;

TEST_CASE("coefficient count identity", "[neural]") {
  CHECK(coefficient_count(25, 60) == 91585);
  CHECK(coefficient_count(1, 1) == 63);
  CHECK(coefficient_count(4, 2) == 494);
  CHECK(NetSpec::for_grid(4, 2).n_in == 240);
  CHECK_THROWS_AS(coefficient_count(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(coefficient_count(3, 0), std::invalid_argument);
}

TEST_CASE("forward pass", "[neural]") {
  const NetSpec spec{3, 2, 1};
  const std::vector<double> zeros(spec.coefficient_count(), 0.0);
  const std::vector<double> in{0.3, -0.2, 0.9};
  CHECK(forward<double>(spec, zeros, in) == std::vector<double>{0.0});

  const NetSpec chain{1, 1, 1};
  CHECK(forward<double>(chain, std::vector<double>{1, 0, 1, 0}, std::vector<double>{0.0})[0] == 0.0);
  // tanh(1 * tanh(2 * 0.5 + 0.1) - 0.3)
  CHECK(forward<double>(chain, std::vector<double>{2, 0.1, 1, -0.3}, std::vector<double>{0.5})[0] ==
        Catch::Approx(std::tanh(std::tanh(1.1) - 0.3)).epsilon(1e-15));

  CHECK_THROWS_AS(forward<double>(spec, zeros, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(forward<double>(spec, std::vector<double>(3), in), std::invalid_argument);
}

TEST_CASE("outputs stay inside (-1, 1)", "[neural]") {
  const NetSpec spec{5, 4, 3};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(spec.coefficient_count()), x(5);
    for (double& v : p) v = n(rng);
    for (double& v : x) v = n(rng);
    for (double y : forward<double>(spec, p, x)) {
      CHECK(y >= -1.0);
      CHECK(y <= 1.0);
    }
  }
}

TEST_CASE("forward gradients match finite differences on a 3-2-1 net", "[neural][fd]") {
  const NetSpec spec{3, 2, 1};
  const std::vector<double> p0 = init_standard_normal(spec, 9);
  const std::vector<double> in{0.4, -0.7, 0.2};
  Tape t;
  std::vector<Var> p;
  for (double v : p0) p.push_back(t.new_input(v));
  std::vector<Var> x(in.begin(), in.end());
  const ad::Gradient g = t.backward(forward<Var>(spec, p, x)[0]);
  auto plain = [&](const std::vector<double>& q) { return forward<double>(spec, q, in)[0]; };
  for (std::size_t i = 0; i < p0.size(); ++i) {
    INFO("coefficient " << i);
    CHECK(testing::rel_err(g.at(i), testing::central_difference(plain, p0, i, 1e-6), 1e-6) <= 1e-5);
    CHECK(g.at(i) != 0.0);
  }
}

TEST_CASE("standard normal initialization", "[neural]") {
  const NetSpec spec{999, 100, 1};
  REQUIRE(spec.coefficient_count() >= 100000);
  const auto a = init_standard_normal(spec, 1);
  CHECK(a == init_standard_normal(spec, 1));
  CHECK(a != init_standard_normal(spec, 2));
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  CHECK(std::abs(mean) < 0.02);
}

TEST_CASE("coefficient files round-trip", "[neural]") {
  const NetSpec spec{4, 3, 2};
  const auto p = init_standard_normal(spec, 5);
  std::stringstream ss;
  write_coefficients(ss, spec, p);
  NetSpec back;
  CHECK(read_coefficients(ss, back) == p);
  CHECK(back.n_in == 4);
  CHECK(back.n_hidden == 3);
  CHECK(back.n_out == 2);

  std::stringstream bad("4\n3\n2\n0.5\n");
  CHECK_THROWS(read_coefficients(bad, back));
}
