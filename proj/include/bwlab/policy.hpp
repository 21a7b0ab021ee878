#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bwlab/chain.hpp"
#include "bwlab/rng.hpp"

namespace bwlab {

struct ForecastState {
  double value = 0.0;      // q-hat
  double smoothing = 0.5;  // lambda in (0,1]
};

// q-hat' = lambda * observed + (1 - lambda) * q-hat
ForecastState forecast_update(const ForecastState& f, double observed_order);

// [theta * q-hat + shock - ip]^+
double order_up_to(const ForecastState& f, double theta, double shock, double ip);

// theta * q-hat + shock - ip; may be negative (linear benchmark only).
double linear_order(const ForecastState& f, double theta, double shock, double ip);

// Zero-mean perturbation of the order-up-to target.
struct DecisionShockSpec {
  enum class Family { kZero, kGaussian, kUniform, kDiscrete };

  Family family = Family::kZero;
  double scale = 0.0;  // gaussian: sigma; uniform: half-width
  // Discrete family: support and probabilities; must have mean zero.
  std::vector<double> values;
  std::vector<double> probabilities;
  std::uint64_t stream = 0;  // mixed into the per-tier seed

  static DecisionShockSpec zero() { return {}; }
  static DecisionShockSpec gaussian(double sigma) { return {Family::kGaussian, sigma, {}, {}, 0}; }
  static DecisionShockSpec uniform(double half_width) { return {Family::kUniform, half_width, {}, {}, 0}; }
  static DecisionShockSpec discrete(std::vector<double> values, std::vector<double> probabilities);

  double variance() const;
  double draw(Rng& rng) const;
  // Throws ParameterError for negative scales or a non-centred discrete law.
  void validate() const;

  bool operator==(const DecisionShockSpec&) const = default;
};

std::string to_string(DecisionShockSpec::Family family);
DecisionShockSpec::Family shock_family_from_string(const std::string& name);

// Everything a tier may look at when deciding: its own state, the last
// downstream order, its last delivery and its cost rates.
struct Observation {
  std::size_t tier = 0;
  long week = 0;
  double on_hand = 0.0;
  double backlog = 0.0;
  double outstanding = 0.0;
  double inventory_position = 0.0;
  double forecast = 0.0;
  double incoming_order = 0.0;  // most recently observed downstream order
  double last_order = 0.0;
  double last_delivery = 0.0;
  double holding_rate = 0.5;
  double backlog_rate = 1.0;
  int order_delay = 1;
  int ship_delay = 2;
};

Observation observe(const SerialChain& chain, const ChainState& state, std::size_t k);

struct Decision {
  double order = 0.0;
  std::optional<double> log_prob;
};

// A tier's ordering rule. Implementations are immutable; all randomness comes
// from the caller's stream so identical (observation, stream) pairs give
// identical decisions.
class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual Decision decide(const Observation& obs, Rng& rng) const = 0;
  virtual std::string name() const = 0;
  // Whether the policy may emit negative orders (linear benchmark only).
  virtual bool allows_negative() const { return false; }
};

using PolicyPtr = std::shared_ptr<const AgentPolicy>;

class OrderUpToPolicy final : public AgentPolicy {
 public:
  OrderUpToPolicy(double theta, DecisionShockSpec shock);
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "order_up_to"; }
  double theta() const noexcept { return theta_; }
  const DecisionShockSpec& shock() const noexcept { return shock_; }

 private:
  double theta_;
  DecisionShockSpec shock_;
};

class LinearOrderPolicy final : public AgentPolicy {
 public:
  LinearOrderPolicy(double theta, DecisionShockSpec shock);
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "linear"; }
  bool allows_negative() const override { return true; }
  double theta() const noexcept { return theta_; }
  const DecisionShockSpec& shock() const noexcept { return shock_; }

 private:
  double theta_;
  DecisionShockSpec shock_;
};

// Deterministic: order up to a fixed inventory-position level.
class BaseStockPolicy final : public AgentPolicy {
 public:
  explicit BaseStockPolicy(double level) : level_(level) {}
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "base_stock"; }

 private:
  double level_;
};

class ConstantPolicy final : public AgentPolicy {
 public:
  explicit ConstantPolicy(double order);
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "constant"; }

 private:
  double order_;
};

// Integer order drawn uniformly from [low, high].
class UniformRandomPolicy final : public AgentPolicy {
 public:
  UniformRandomPolicy(long low, long high);
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "uniform_random"; }

 private:
  long low_, high_;
};

// Draws `samples` decisions from the base policy on the same observation and
// returns the most frequent rounded order, ties to the smallest. Sample i
// uses its own stream derived from one draw of the caller's stream.
class MajorityVotePolicy final : public AgentPolicy {
 public:
  MajorityVotePolicy(PolicyPtr base, int samples);
  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "majority_vote"; }
  bool allows_negative() const override { return base_->allows_negative(); }
  int samples() const noexcept { return samples_; }

 private:
  PolicyPtr base_;
  int samples_;
};

// Mode of values rounded to the nearest integer; ties to the smallest.
double rounded_mode(const std::vector<double>& values);

}  // namespace bwlab
