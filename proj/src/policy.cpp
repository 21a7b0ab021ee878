#include "bwlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bwlab/error.hpp"

namespace bwlab {

ForecastState forecast_update(const ForecastState& f, double observed_order) {
  return {f.smoothing * observed_order + (1.0 - f.smoothing) * f.value, f.smoothing};
}

double order_up_to(const ForecastState& f, double theta, double shock, double ip) {
  return std::max(0.0, linear_order(f, theta, shock, ip));
}

double linear_order(const ForecastState& f, double theta, double shock, double ip) {
  return theta * f.value + shock - ip;
}

DecisionShockSpec DecisionShockSpec::discrete(std::vector<double> values, std::vector<double> probabilities) {
  DecisionShockSpec s;
  s.family = Family::kDiscrete;
  s.values = std::move(values);
  s.probabilities = std::move(probabilities);
  s.validate();
  return s;
}

void DecisionShockSpec::validate() const {
  switch (family) {
    case Family::kZero:
      return;
    case Family::kGaussian:
    case Family::kUniform:
      if (!(scale >= 0.0) || !std::isfinite(scale)) throw ParameterError("shock scale must be finite and >= 0");
      return;
    case Family::kDiscrete: {
      if (values.empty() || values.size() != probabilities.size())
        throw ParameterError("discrete shock needs matching non-empty values and probabilities");
      double total = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (probabilities[i] < 0.0) throw ParameterError("discrete shock probabilities must be >= 0");
        total += probabilities[i];
        mean += probabilities[i] * values[i];
      }
      if (std::abs(total - 1.0) > 1e-9) throw ParameterError("discrete shock probabilities must sum to 1");
      if (std::abs(mean) > 1e-9) throw ParameterError("discrete shock must have mean zero");
      return;
    }
  }
}

double DecisionShockSpec::variance() const {
  switch (family) {
    case Family::kZero:
      return 0.0;
    case Family::kGaussian:
      return scale * scale;
    case Family::kUniform:
      return scale * scale / 3.0;
    case Family::kDiscrete: {
      double v = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) v += probabilities[i] * values[i] * values[i];
      return v;
    }
  }
  return 0.0;
}

double DecisionShockSpec::draw(Rng& rng) const {
  switch (family) {
    case Family::kZero:
      return 0.0;
    case Family::kGaussian:
      return scale > 0.0 ? rng.normal(0.0, scale) : 0.0;
    case Family::kUniform:
      return scale > 0.0 ? rng.uniform(-scale, scale) : 0.0;
    case Family::kDiscrete: {
      double u = rng.uniform();
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (u < probabilities[i]) return values[i];
        u -= probabilities[i];
      }
      return values.back();
    }
  }
  return 0.0;
}

std::string to_string(DecisionShockSpec::Family family) {
  switch (family) {
    case DecisionShockSpec::Family::kZero:
      return "zero";
    case DecisionShockSpec::Family::kGaussian:
      return "gaussian";
    case DecisionShockSpec::Family::kUniform:
      return "uniform";
    case DecisionShockSpec::Family::kDiscrete:
      return "discrete";
  }
  return "zero";
}

DecisionShockSpec::Family shock_family_from_string(const std::string& name) {
  if (name == "zero") return DecisionShockSpec::Family::kZero;
  if (name == "gaussian") return DecisionShockSpec::Family::kGaussian;
  if (name == "uniform") return DecisionShockSpec::Family::kUniform;
  if (name == "discrete") return DecisionShockSpec::Family::kDiscrete;
  throw ParameterError("unknown shock family '" + name + "'");
}

Observation observe(const SerialChain& chain, const ChainState& state, std::size_t k) {
  const TierState& tier = state.tiers.at(k);
  const TierParams& p = chain.tier(k);
  Observation o;
  o.tier = k;
  o.week = state.period + 1;
  o.on_hand = tier.on_hand;
  o.backlog = tier.backlog;
  o.outstanding = tier.outstanding;
  o.inventory_position = inventory_position(tier);
  o.forecast = tier.forecast;
  o.incoming_order = state.last_incoming.at(k);
  o.last_order = state.last_orders.at(k);
  o.last_delivery = state.last_receipts.at(k);
  o.holding_rate = p.holding_rate;
  o.backlog_rate = p.backlog_rate;
  o.order_delay = p.order_delay;
  o.ship_delay = p.ship_delay;
  return o;
}

OrderUpToPolicy::OrderUpToPolicy(double theta, DecisionShockSpec shock) : theta_(theta), shock_(std::move(shock)) {
  if (!(theta_ > 0.0)) throw ParameterError("theta must be > 0");
  shock_.validate();
}

Decision OrderUpToPolicy::decide(const Observation& obs, Rng& rng) const {
  const double eps = shock_.draw(rng);
  return {order_up_to({obs.forecast, 1.0}, theta_, eps, obs.inventory_position), std::nullopt};
}

LinearOrderPolicy::LinearOrderPolicy(double theta, DecisionShockSpec shock) : theta_(theta), shock_(std::move(shock)) {
  if (!(theta_ > 0.0)) throw ParameterError("theta must be > 0");
  shock_.validate();
}

Decision LinearOrderPolicy::decide(const Observation& obs, Rng& rng) const {
  const double eps = shock_.draw(rng);
  return {linear_order({obs.forecast, 1.0}, theta_, eps, obs.inventory_position), std::nullopt};
}

Decision BaseStockPolicy::decide(const Observation& obs, Rng&) const {
  return {std::max(0.0, level_ - obs.inventory_position), std::nullopt};
}

ConstantPolicy::ConstantPolicy(double order) : order_(order) {
  if (!(order_ >= 0.0)) throw ParameterError("constant order must be >= 0");
}

Decision ConstantPolicy::decide(const Observation&, Rng&) const { return {order_, std::nullopt}; }

UniformRandomPolicy::UniformRandomPolicy(long low, long high) : low_(low), high_(high) {
  if (low_ < 0 || high_ < low_) throw ParameterError("uniform_random needs 0 <= low <= high");
}

Decision UniformRandomPolicy::decide(const Observation&, Rng& rng) const {
  const long a = rng.uniform_int(low_, high_);
  return {static_cast<double>(a), -std::log(static_cast<double>(high_ - low_ + 1))};
}

MajorityVotePolicy::MajorityVotePolicy(PolicyPtr base, int samples) : base_(std::move(base)), samples_(samples) {
  if (!base_) throw ParameterError("majority vote needs a base policy");
  if (samples_ < 1) throw ParameterError("majority vote needs at least one sample");
}

Decision MajorityVotePolicy::decide(const Observation& obs, Rng& rng) const {
  const std::uint64_t root = rng.next();
  std::vector<double> draws(static_cast<std::size_t>(samples_));
  for (int i = 0; i < samples_; ++i) {
    Rng sub(derive_seed(root, {static_cast<std::uint64_t>(i)}));
    draws[static_cast<std::size_t>(i)] = base_->decide(obs, sub).order;
  }
  return {rounded_mode(draws), std::nullopt};
}

double rounded_mode(const std::vector<double>& values) {
  if (values.empty()) throw InputError("mode of an empty sample");
  std::map<double, int> counts;  // ordered, so the first maximum is the smallest value
  for (double v : values) ++counts[std::round(v)];
  double best = counts.begin()->first;
  int best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best + 0.0;  // normalises -0.0
}

}  // namespace bwlab
