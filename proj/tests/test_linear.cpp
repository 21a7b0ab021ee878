#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "bwlab/bounds.hpp"
#include "bwlab/error.hpp"
#include "bwlab/lag_filter.hpp"
#include "bwlab/linear_sim.hpp"
#include "bwlab/policy.hpp"
#include "bwlab/rng.hpp"

using namespace bwlab;

namespace {

constexpr double kPi = std::numbers::pi;

void check_prefix(const std::vector<double>& got, const std::vector<double>& expect, double tol = 1e-12) {
  REQUIRE(got.size() >= expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(tol));
}

double sum_squares(const std::vector<double>& h) {
  double s = 0.0;
  for (double v : h) s += v * v;
  return s;
}

// Direct convolution, the oracle for cascades.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

}  // namespace

TEST_CASE("tier filter impulse responses") {
  check_prefix(tier_filter(1, 1).impulse_response(6), {0, 2, -1, 0, 0, 0});
  check_prefix(tier_filter(2, 0.5).impulse_response(5), {0, 2, -0.5, -0.25, -0.125});
  check_prefix(difference_filter().impulse_response(4), {1, -1, 0, 0});
}

TEST_CASE("tier filter impulse response matches its closed form") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const double theta = rng.uniform(0.01, 5), lambda = rng.uniform(0.01, 1);
    const auto h = tier_filter(theta, lambda).impulse_response(40);
    CHECK(h[0] == 0.0);
    CHECK(h[1] == doctest::Approx(1 + theta * lambda));
    for (std::size_t j = 2; j < h.size(); ++j)
      CHECK(h[j] == doctest::Approx(-theta * lambda * lambda * std::pow(1 - lambda, j - 2.0)).epsilon(1e-10));
  }
}

TEST_CASE("tier filter parameter domain") {
  CHECK_THROWS_AS(tier_filter(1, 0), ParameterError);
  CHECK_THROWS_AS(tier_filter(1, 1.5), ParameterError);
  CHECK_THROWS_AS(tier_filter(-1, 0.5), ParameterError);
  CHECK_NOTHROW(tier_filter(0, 0.5));
}

TEST_CASE("filters reject unstable or unnormalised denominators") {
  CHECK_THROWS_AS(LagFilter({1}, {2, 1}), ParameterError);
  CHECK_THROWS_AS(LagFilter({1}, {1, -1}), ParameterError);
  CHECK_THROWS_AS(LagFilter({1}, {1, -2.5, 1}), ParameterError);
  const LagFilter ok({1}, {1, -0.5});
  CHECK(ok.pole_radius() == doctest::Approx(0.5));
  check_prefix(ok.impulse_response(4), {1, 0.5, 0.25, 0.125});
}

TEST_CASE("truncation depth keeps the discarded tail below tolerance") {
  const auto h = tier_filter(2, 0.1);
  const std::size_t n = h.depth_for_tail(1e-12);
  const auto coeffs = h.impulse_response(n + 4000);
  double tail = 0.0;
  for (std::size_t j = n; j < coeffs.size(); ++j) tail += coeffs[j] * coeffs[j];
  CHECK(tail < 1e-12);
}

TEST_CASE("frequency gain") {
  CHECK(frequency_gain(tier_filter(1, 1), 0.0) == doctest::Approx(1.0));
  CHECK(frequency_gain(tier_filter(2.5, 0.3), 0.0) == doctest::Approx(1.0));
  CHECK(frequency_gain(tier_filter(1, 1), kPi) == doctest::Approx(9.0));
  CHECK(tier_gain(1, 1, kPi) == doctest::Approx(9.0));
  CHECK(frequency_gain(difference_filter(), kPi) == doctest::Approx(4.0));
}

TEST_CASE("closed-form tier gain agrees with complex evaluation") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double theta = rng.uniform(0.01, 4), lambda = rng.uniform(0.05, 1), w = rng.uniform(-kPi, kPi);
    CHECK(tier_gain(theta, lambda, w) == doctest::Approx(frequency_gain(tier_filter(theta, lambda), w)).epsilon(1e-10));
  }
}

TEST_CASE("average gain") {
  CHECK(average_gain(0, 0.7) == 1.0);
  CHECK(average_gain(1, 1) == doctest::Approx(5.0));
  CHECK(average_gain(3, 0.5) == doctest::Approx(7.0));
  CHECK(sum_squares(tier_filter(3, 0.5).impulse_response(200)) == doctest::Approx(7.0));
  CHECK(tier_filter(1, 1).energy() == doctest::Approx(5.0));
}

TEST_CASE("gain never attenuates") {
  for (double theta : {0.1, 0.5, 1.0, 2.0, 4.0})
    for (double lambda : {0.05, 0.3, 0.7, 1.0}) {
      CHECK(tier_gain(theta, lambda, 0.0) == doctest::Approx(1.0));
      for (int i = 1; i <= 500; ++i) {
        const double w = kPi * i / 500.0;
        CHECK(tier_gain(theta, lambda, w) > 1.0);
        CHECK(tier_gain(theta, lambda, -w) > 1.0);
      }
    }
}

TEST_CASE("Parseval: mean of the gain equals the average gain") {
  for (double theta : {0.25, 1.0, 2.5, 4.0})
    for (double lambda : {0.05, 0.4, 1.0}) {
      const double q = periodic_mean([&](double w) { return tier_gain(theta, lambda, w); });
      CHECK(std::abs(q - average_gain(theta, lambda)) < 1e-6);
    }
  const double g = periodic_mean([](double w) { return frequency_gain(difference_filter(), w); });
  CHECK(std::abs(g - 2.0) < 1e-9);
}

TEST_CASE("average gain increases in both parameters") {
  const double h = 1e-4;
  for (double theta = 0.2; theta <= 4.0; theta += 0.45)
    for (double lambda = 0.05; lambda <= 0.95; lambda += 0.1) {
      CHECK(average_gain(theta + h, lambda) > average_gain(theta, lambda));
      CHECK(average_gain(theta, lambda + h) > average_gain(theta, lambda));
    }
}

TEST_CASE("cascade is convolution") {
  const LagFilter g = difference_filter();
  check_prefix(cascade({g}).impulse_response(4), {1, -1, 0, 0});
  check_prefix(cascade({g, g}).impulse_response(5), {1, -2, 1, 0, 0});
  check_prefix(cascade({tier_filter(1, 1), g}).impulse_response(6), {0, 2, -3, 1, 0, 0});
  CHECK_THROWS_AS(cascade({}), InputError);

  const auto a = tier_filter(1.3, 0.4), b = tier_filter(0.7, 0.9);
  const auto oracle = convolve(a.impulse_response(60), b.impulse_response(60));
  check_prefix(cascade({a, b, LagFilter()}).impulse_response(60), std::vector<double>(oracle.begin(), oracle.begin() + 60),
               1e-9);
}

TEST_CASE("product-gain lower bound on heterogeneous chains") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 4));
    std::vector<TierGain> tiers(n);
    std::vector<LagFilter> filters;
    double product = 1.0;
    for (auto& t : tiers) {
      t = {rng.uniform(0.1, 3), rng.uniform(0.1, 1)};
      filters.push_back(tier_filter(t.theta, t.lambda));
      product *= average_gain(t.theta, t.lambda);
    }
    const auto c = cascade(filters);
    CHECK(periodic_mean([&](double w) { return frequency_gain(c, w); }) >= product * (1 - 1e-9));
  }
}

TEST_CASE("demand and decision bounds") {
  const auto g = GainProfile::uniform(1, 1, 3);
  CHECK(g.gain(1) == doctest::Approx(5));
  CHECK(demand_bound(0, 1, g) == 1.0);
  CHECK(demand_bound(1, 1, g) == doctest::Approx(5));
  CHECK(demand_bound(2, 1, g) == doctest::Approx(25));
  CHECK(demand_bound(3, 1, g) == doctest::Approx(125));
  CHECK(decision_bound(1, {1}, g) == doctest::Approx(2));
  CHECK(decision_bound(2, {1, 0}, g) == doctest::Approx(10));
  CHECK(decision_bound(3, {1, 1, 1}, g) == doctest::Approx(62));
  CHECK(decision_bound(3, {0, 0, 0}, g) == 0.0);
  CHECK(uniform_demand_bound(2, 2, g) == doctest::Approx(50));
}

TEST_CASE("heterogeneous bounds dominate the uniform ones") {
  const GainProfile g({{1, 0.5}, {2, 0.8}, {0.5, 1.0}});
  CHECK(g.theta_floor() == 0.5);
  CHECK(g.lambda_floor() == 0.5);
  CHECK(g.uniform_gain() == doctest::Approx(average_gain(0.5, 0.5)));
  const std::vector<double> shocks{1, 0.5, 2};
  for (std::size_t k = 1; k <= 3; ++k) {
    CHECK(demand_bound(k, 1.5, g) >= uniform_demand_bound(k, 1.5, g));
    CHECK(decision_bound(k, shocks, g) >= uniform_decision_bound(k, shocks, g));
    // The exact variances of the linear chain sit above the bounds.
    CHECK(exact_demand_variance(k, 1.5, g) >= demand_bound(k, 1.5, g) * (1 - 1e-9));
    CHECK(exact_decision_variance(k, shocks, g) >= decision_bound(k, shocks, g) * (1 - 1e-9));
  }
  CHECK(exact_demand_variance(1, 1.5, g) == doctest::Approx(demand_bound(1, 1.5, g)));
  CHECK(exact_decision_variance(1, shocks, g) == doctest::Approx(decision_bound(1, shocks, g)));
}

TEST_CASE("single nonzero shock grows geometrically upstream") {
  const auto g = GainProfile::uniform(1, 0.5, 5);
  std::vector<double> s(5, 0.0);
  s[1] = 3.0;
  for (std::size_t k = 2; k <= 5; ++k)
    CHECK(decision_bound(k, s, g) >= 2 * 3.0 * std::pow(g.uniform_gain(), k - 2.0) * (1 - 1e-12));
}

TEST_CASE("bound reports and CSV") {
  const auto reports = bound_reports(GainProfile::uniform(1, 1, 3), 1.0, {1, 1, 1});
  REQUIRE(reports.size() == 3);
  CHECK(reports[2].decision_bound == doctest::Approx(62));
  std::ostringstream os;
  write_bounds_csv(os, reports);
  const std::string csv = os.str();
  CHECK(csv.rfind("k,gamma_k,demand_bound,decision_bound,uniform_demand_bound,uniform_decision_bound\n", 0) == 0);
  CHECK(csv.find("\n3,5,125,62,125,62\n") != std::string::npos);
  for (const auto& r : bound_reports(GainProfile::uniform(2, 0.3, 4), 0.5, {0, 0, 0, 0})) {
    CHECK(r.decision_bound == 0.0);
    CHECK(r.demand_bound >= 0.0);
  }
}

TEST_CASE("intertemporal variance") {
  const auto g = GainProfile::uniform(1, 1, 2);
  check_prefix(intertemporal_variance(1, 3, {1, 0}, g), {1, 2, 2});
  check_prefix(intertemporal_variance(2, 4, {1, 0}, g), {0, 4, 13, 14});
  for (double w : intertemporal_variance(2, 5, {0, 0}, g)) CHECK(w == 0.0);
}

TEST_CASE("intertemporal variance is nondecreasing") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
    std::vector<TierGain> tiers(n);
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) {
      tiers[k] = {rng.uniform(0.1, 4), rng.uniform(0.05, 1)};
      s[k] = rng.uniform(0, 2);
    }
    const GainProfile g(tiers);
    const auto w = intertemporal_variance(n, 30, s, g);
    for (std::size_t t = 1; t < w.size(); ++t) CHECK(w[t] >= w[t - 1]);
  }
}

TEST_CASE("linear simulation impulses") {
  const auto g = GainProfile::uniform(1, 1, 1);
  CHECK(simulate_linear(g, std::vector<double>(6, 0.0), {})[0] == std::vector<double>(6, 0.0));
  check_prefix(simulate_linear(g, std::vector<double>{1, 0, 0, 0, 0}, {})[0], {0, 2, -1, 0, 0});
  check_prefix(simulate_linear(g, std::vector<double>(5, 0.0), {{1, 0, 0, 0, 0}})[0], {1, -1, 0, 0, 0});
}

TEST_CASE("scalar recursion and filter cascade agree") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
    std::vector<TierGain> tiers(n);
    for (auto& t : tiers) t = {rng.uniform(0.1, 3), rng.uniform(0.05, 1)};
    const GainProfile g(tiers);
    const std::size_t T = 150;
    std::vector<double> d(T);
    for (auto& v : d) v = rng.normal(0, 2);
    Paths shocks(n, std::vector<double>(T));
    for (auto& row : shocks)
      for (auto& v : row) v = rng.normal();
    const auto a = simulate_linear(g, d, shocks);
    const auto b = orders_by_filters(g, d, shocks);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t t = 0; t < T; ++t) {
        const double scale = std::max(1.0, std::abs(a[k][t]));
        CHECK(std::abs(a[k][t] - b[k][t]) <= 1e-9 * scale);
      }
  }
}

TEST_CASE("state-space chain reproduces the scalar recursion") {
  const GainProfile g({{1.5, 0.4}, {0.8, 0.9}, {2, 0.6}});
  const LinearChain chain({{1.5, 0.4}, {0.8, 0.9}, {2, 0.6}});
  Rng rng(4);
  const std::size_t T = 60, n = 3;
  std::vector<double> d(T);
  for (auto& v : d) v = rng.normal();
  Paths shocks(n, std::vector<double>(T));
  for (auto& row : shocks)
    for (auto& v : row) v = rng.normal();
  auto s = chain.initial_state();
  Paths orders(n, std::vector<double>(T));
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> q(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Observation o = chain.observe(s, k);
      q[k] = linear_order({o.forecast, 1.0}, chain.tier(k).theta, shocks[k][t], o.inventory_position);
      orders[k][t] = q[k];
    }
    chain.advance(s, d[t], q);
  }
  const auto ref = simulate_linear(g, d, shocks);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < T; ++t) CHECK(orders[k][t] == doctest::Approx(ref[k][t]).epsilon(1e-9));
}
