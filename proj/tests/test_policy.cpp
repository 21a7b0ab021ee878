#include <doctest.h>

#include <atomic>
#include <cmath>
#include <memory>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "bwlab/error.hpp"
#include "bwlab/policy.hpp"
#include "bwlab/remote_agent.hpp"
#include "bwlab/stats.hpp"

using namespace bwlab;

namespace {

// Orders `low` with probability p, else `high`.
class TwoPointPolicy final : public AgentPolicy {
 public:
  TwoPointPolicy(double low, double high, double p) : low_(low), high_(high), p_(p) {}
  Decision decide(const Observation&, Rng& rng) const override { return {rng.uniform() < p_ ? low_ : high_, {}}; }
  std::string name() const override { return "two_point"; }

 private:
  double low_, high_, p_;
};

Observation sample_observation() {
  Observation o;
  o.tier = 1;
  o.week = 7;
  o.on_hand = 12;
  o.backlog = 3;
  o.outstanding = 9;
  o.inventory_position = 18;
  o.forecast = 5;
  o.incoming_order = 6;
  o.last_order = 4;
  o.last_delivery = 8;
  return o;
}

// P(Bin(n, p) > n / 2) for odd n.
double majority_probability(int n, double p) {
  double total = 0.0;
  for (int k = n / 2 + 1; k <= n; ++k)
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log1p(-p));
  return total;
}

// Local HTTP endpoint answering each POST with `respond(prompt, call index)`.
class MockAgentServer {
 public:
  using Responder = std::function<std::pair<int, std::string>(const std::string&, int)>;

  explicit MockAgentServer(Responder respond) : respond_(std::move(respond)) {
    server_.Post("/decide", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = calls_++;
      auto [status, body] = respond_(req.body, call);
      res.status = status;
      res.set_content(body, "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockAgentServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/decide"; }
  int calls() const { return calls_.load(); }

 private:
  Responder respond_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
};

RemoteAgentConfig remote_config(const std::string& endpoint) {
  RemoteAgentConfig c;
  c.endpoint = endpoint;
  c.timeout_ms = 2000;
  c.retries = 2;
  return c;
}

}  // namespace

TEST_CASE("forecast update") {
  CHECK(forecast_update({7, 1.0}, 4).value == 4.0);
  CHECK(forecast_update({8, 0.5}, 4).value == 6.0);
  CHECK(forecast_update({10, 0.2}, 10).value == 10.0);
}

TEST_CASE("forecast update contracts toward the observation") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double lambda = rng.uniform(0.01, 1.0);
    const double f = rng.uniform(-50, 50), obs = rng.uniform(-50, 50);
    const double next = forecast_update({f, lambda}, obs).value;
    CHECK(std::abs(next - obs) == doctest::Approx((1 - lambda) * std::abs(f - obs)).epsilon(1e-12));
  }
}

TEST_CASE("order-up-to rule") {
  CHECK(order_up_to({4, 1}, 3, 0, 12) == 0.0);
  CHECK(order_up_to({4, 1}, 3, 2, 10) == 4.0);
  CHECK(order_up_to({4, 1}, 3, -20, 0) == 0.0);
}

TEST_CASE("linear rule is unclamped") {
  CHECK(linear_order({4, 1}, 3, 0, 12) == 0.0);
  CHECK(linear_order({4, 1}, 3, -20, 0) == -8.0);
  CHECK(linear_order({0, 1}, 2, 1, -3) == 4.0);
}

TEST_CASE("order-up-to is the positive part of the linear rule") {
  Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    const ForecastState f{rng.uniform(-10, 30), 0.5};
    const double theta = rng.uniform(0.01, 6), eps = rng.normal(0, 5), ip = rng.uniform(-40, 80);
    CHECK(order_up_to(f, theta, eps, ip) == std::max(linear_order(f, theta, eps, ip), 0.0));
  }
}

TEST_CASE("decision shocks are centred with the declared variance") {
  CHECK(DecisionShockSpec::zero().variance() == 0.0);
  CHECK(DecisionShockSpec::gaussian(2).variance() == 4.0);
  CHECK(DecisionShockSpec::uniform(3).variance() == doctest::Approx(3.0));
  const auto d = DecisionShockSpec::discrete({-2, 1}, {1.0 / 3, 2.0 / 3});
  CHECK(d.variance() == doctest::Approx(2.0));
  CHECK_THROWS_AS(DecisionShockSpec::discrete({0, 1}, {0.5, 0.5}), ParameterError);
  CHECK_THROWS_AS(DecisionShockSpec::gaussian(-1).validate(), ParameterError);

  for (const auto& spec : {DecisionShockSpec::gaussian(1.5), DecisionShockSpec::uniform(2.0), d}) {
    Rng rng(99);
    std::vector<double> x(40000);
    for (auto& v : x) v = spec.draw(rng);
    const double se = std::sqrt(spec.variance() / static_cast<double>(x.size()));
    CHECK(std::abs(mean(x)) < 4 * se);
    CHECK(sample_variance(x) == doctest::Approx(spec.variance()).epsilon(0.05));
  }
}

TEST_CASE("policies are reproducible under identical streams") {
  const OrderUpToPolicy p(4, DecisionShockSpec::gaussian(2));
  const auto obs = sample_observation();
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(p.decide(obs, a).order == p.decide(obs, b).order);
}

TEST_CASE("simple policies") {
  const auto obs = sample_observation();
  Rng rng(1);
  CHECK(BaseStockPolicy(30).decide(obs, rng).order == 12.0);
  CHECK(BaseStockPolicy(10).decide(obs, rng).order == 0.0);
  CHECK(ConstantPolicy(4).decide(obs, rng).order == 4.0);
  CHECK_THROWS_AS(ConstantPolicy(-1), ParameterError);
  const UniformRandomPolicy u(2, 5);
  for (int i = 0; i < 200; ++i) {
    const double q = u.decide(obs, rng).order;
    CHECK(q >= 2.0);
    CHECK(q <= 5.0);
    CHECK(q == std::round(q));
  }
}

TEST_CASE("rounded mode breaks ties toward the smallest order") {
  CHECK(rounded_mode({3, 3, 7}) == 3.0);
  CHECK(rounded_mode({7, 3}) == 3.0);
  CHECK(rounded_mode({4.4, 3.6, 9}) == 4.0);
  CHECK_THROWS_AS(rounded_mode({}), InputError);
}

TEST_CASE("majority vote of a deterministic base") {
  const MajorityVotePolicy vote(std::make_shared<ConstantPolicy>(5), 10);
  Rng rng(1);
  CHECK(vote.decide(sample_observation(), rng).order == 5.0);
  CHECK_THROWS_AS(MajorityVotePolicy(std::make_shared<ConstantPolicy>(5), 0), ParameterError);
}

TEST_CASE("majority vote picks the majority with the binomial probability") {
  const auto base = std::make_shared<TwoPointPolicy>(4, 20, 0.6);
  const MajorityVotePolicy vote(base, 101);
  const double oracle = majority_probability(101, 0.6);
  CHECK(oracle > 0.97);
  Rng rng(2024);
  const int trials = 4000;
  int hits = 0;
  for (int i = 0; i < trials; ++i) hits += vote.decide(sample_observation(), rng).order == 4.0;
  const double freq = static_cast<double>(hits) / trials;
  CHECK(std::abs(freq - oracle) < 4 * std::sqrt(oracle * (1 - oracle) / trials));
  CHECK(freq > 0.97);
}

TEST_CASE("a single-sample vote has the base distribution") {
  const auto base = std::make_shared<TwoPointPolicy>(4, 20, 0.6);
  const MajorityVotePolicy vote(base, 1);
  Rng r1(7), r2(8);
  const int n = 10000;
  int a = 0, b = 0;
  for (int i = 0; i < n; ++i) {
    a += base->decide(sample_observation(), r1).order == 4.0;
    b += vote.decide(sample_observation(), r2).order == 4.0;
  }
  const double pa = static_cast<double>(a) / n, pb = static_cast<double>(b) / n;
  const double pooled = (pa + pb) / 2;
  const double z = (pa - pb) / std::sqrt(pooled * (1 - pooled) * 2.0 / n);
  CHECK(std::abs(z) < 4.0);
}

TEST_CASE("voting shrinks the per-decision variance") {
  const auto base = std::make_shared<TwoPointPolicy>(4, 20, 0.7);
  std::vector<double> variances;
  for (int n : {1, 11, 101}) {
    const MajorityVotePolicy vote(base, n);
    Rng rng(static_cast<std::uint64_t>(n));
    std::vector<double> x(3000);
    for (auto& v : x) v = vote.decide(sample_observation(), rng).order;
    variances.push_back(sample_variance(x));
  }
  CHECK(variances[0] > variances[1]);
  CHECK(variances[1] > variances[2]);
}

TEST_CASE("prompt rendering") {
  const auto obs = sample_observation();
  const std::string text = render_prompt(obs, default_prompt_template(), 4);
  CHECK(text.find("You are the Wholesaler") != std::string::npos);
  CHECK(text.find("Week 7") != std::string::npos);
  CHECK(text.find("Current Inventory: 12 cases") != std::string::npos);
  CHECK(text.find("Current Backlog: 3 cases") != std::string::npos);
  CHECK(text.find("Incoming Order from Downstream (Retailer): 6 cases") != std::string::npos);
  CHECK(text.find("Last Order You Placed: 4 cases") != std::string::npos);
  CHECK(text.find("Last Delivery You Received: 8 cases") != std::string::npos);
  CHECK(text.find("Holding Cost: 0.50") != std::string::npos);
  CHECK(text.find("{pipeline_info}") == std::string::npos);
  CHECK(text.find("{\"order_quantity\": 5}") != std::string::npos);
  CHECK(render_prompt(obs, "week {week} / {role}", 2) == "week 7 / Tier 2");
  CHECK_THROWS_AS(render_prompt(obs, "{no_such_field}"), InputError);
  CHECK(role_name(0, 4) == "Retailer");
  CHECK(role_name(3, 4) == "Factory");
  CHECK(role_name(4, 6) == "Tier 5");
}

TEST_CASE("order parsing") {
  CHECK(parse_order("{\"order_quantity\": 5}") == 5.0);
  CHECK(parse_order("thinking...\n{\"order_quantity\": 12}\n") == 12.0);
  CHECK(parse_order("{\"order_quantity\": 3.5}") == 3.5);
  CHECK_THROWS_AS(parse_order("{\"order_quantity\": -2}"), ProtocolViolation);
  CHECK_THROWS_AS(parse_order("{\"order_quantity\": \"many\"}"), ProtocolViolation);
  CHECK_THROWS_AS(parse_order("I would order five cases"), ProtocolViolation);
  CHECK_THROWS_AS(parse_order("{\"qty\": 5}"), ProtocolViolation);
  CHECK_THROWS_AS(parse_order(""), ProtocolViolation);
}

TEST_CASE("remote agent round trip recovers the responder's order") {
  // Scripted responder: order = current inventory + incoming order.
  MockAgentServer server([](const std::string& prompt, int) {
    std::smatch inv, inc;
    std::regex_search(prompt, inv, std::regex("Current Inventory: (\\d+)"));
    std::regex_search(prompt, inc, std::regex("Downstream \\([A-Za-z ]+\\): (\\d+)"));
    const int q = std::stoi(inv[1]) + std::stoi(inc[1]);
    return std::make_pair(200, "Let me think.\n{\"order_quantity\": " + std::to_string(q) + "}\n");
  });
  const RemoteAgentPolicy agent(remote_config(server.endpoint()));
  Rng rng(1);
  auto obs = sample_observation();
  CHECK(agent.decide(obs, rng).order == 18.0);
  obs.on_hand = 2;
  obs.incoming_order = 9;
  CHECK(agent.decide(obs, rng).order == 11.0);
  CHECK(agent.violations() == 0);
  CHECK(server.calls() == 2);
}

TEST_CASE("remote agent retries protocol violations") {
  MockAgentServer server([](const std::string&, int call) {
    if (call < 2) return std::make_pair(200, std::string("{\"order_quantity\": -1}"));
    return std::make_pair(200, std::string("{\"order_quantity\": 7}"));
  });
  const RemoteAgentPolicy agent(remote_config(server.endpoint()));
  Rng rng(1);
  CHECK(agent.decide(sample_observation(), rng).order == 7.0);
  CHECK(agent.violations() == 2);
  CHECK(agent.fallbacks() == 0);
}

TEST_CASE("remote agent falls back to the last order once the budget is spent") {
  MockAgentServer server([](const std::string&, int) { return std::make_pair(200, std::string("no idea")); });
  auto cfg = remote_config(server.endpoint());
  cfg.retries = 1;
  const RemoteAgentPolicy agent(cfg);
  Rng rng(1);
  CHECK(agent.decide(sample_observation(), rng).order == 4.0);
  CHECK(server.calls() == 2);
  CHECK(agent.fallbacks() == 1);
}

TEST_CASE("remote agent can be told to fail instead") {
  MockAgentServer server([](const std::string&, int) { return std::make_pair(500, std::string("down")); });
  auto cfg = remote_config(server.endpoint());
  cfg.fallback = RemoteAgentConfig::Fallback::kFail;
  const RemoteAgentPolicy agent(cfg);
  Rng rng(1);
  CHECK_THROWS_AS(agent.decide(sample_observation(), rng), RemoteBudgetExceeded);
  CHECK(server.calls() == 3);
}

TEST_CASE("remote agent configuration is validated") {
  CHECK_THROWS_AS(RemoteAgentPolicy(remote_config("localhost:1/x")), ParameterError);
  auto cfg = remote_config("http://127.0.0.1:1/x");
  cfg.retries = -1;
  CHECK_THROWS_AS(RemoteAgentPolicy{cfg}, ParameterError);
}
