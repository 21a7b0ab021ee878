#include "bwlab/linear_sim.hpp"

#include "bwlab/error.hpp"

namespace bwlab {

Paths simulate_linear(const GainProfile& tiers, std::span<const double> demand, const Paths& shocks) {
  const std::size_t n = tiers.size();
  const std::size_t horizon = demand.size();
  for (const auto& row : shocks)
    if (row.size() < horizon) throw InputError("shock path shorter than the demand path");
  auto shock = [&](std::size_t k, long t) {  // k is 0-based
    return (t >= 0 && k < shocks.size()) ? shocks[k][static_cast<std::size_t>(t)] : 0.0;
  };

  Paths q(n, std::vector<double>(horizon, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double tl = tiers.tier(k + 1).theta * tiers.tier(k + 1).lambda;
    const double a = 1.0 - tiers.tier(k + 1).lambda;
    auto down = [&](long t) -> double {
      if (t < 0) return 0.0;
      return k == 0 ? demand[static_cast<std::size_t>(t)] : q[k - 1][static_cast<std::size_t>(t)];
    };
    for (std::size_t ti = 0; ti < horizon; ++ti) {
      const long t = static_cast<long>(ti);  // computing q_{k,t} from period t-1 terms
      const double prev = ti > 0 ? q[k][ti - 1] : 0.0;
      q[k][ti] = (1.0 + tl) * down(t - 1) - (tl + a) * down(t - 2) + a * prev + shock(k, t) -
                 (1.0 + a) * shock(k, t - 1) + a * shock(k, t - 2);
    }
  }
  return q;
}

Paths orders_by_filters(const GainProfile& tiers, std::span<const double> demand, const Paths& shocks) {
  const std::size_t n = tiers.size();
  const std::vector<double> d(demand.begin(), demand.end());
  Paths q(n);
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<double> total = demand_to_order_filter(k, tiers).apply(d);
    for (std::size_t j = 1; j <= k && j <= shocks.size(); ++j) {
      std::vector<double> e(shocks[j - 1].begin(), shocks[j - 1].begin() + static_cast<std::ptrdiff_t>(d.size()));
      const auto part = shock_to_order_filter(j, k, tiers).apply(e);
      for (std::size_t t = 0; t < total.size(); ++t) total[t] += part[t];
    }
    q[k - 1] = std::move(total);
  }
  return q;
}

LinearChain::LinearChain(std::vector<TierGain> tiers) : tiers_(std::move(tiers)) {
  if (tiers_.empty()) throw ParameterError("a chain needs at least one tier");
  for (const auto& t : tiers_) {
    if (!(t.lambda > 0.0 && t.lambda <= 1.0)) throw ParameterError("smoothing must lie in (0,1]");
    if (!(t.theta > 0.0)) throw ParameterError("target_multiplier must be > 0");
  }
}

LinearChainState LinearChain::initial_state(double inventory_position, double forecast) const {
  LinearChainState s;
  s.inventory_position.assign(tiers_.size(), inventory_position);
  s.forecast.assign(tiers_.size(), forecast);
  s.last_orders.assign(tiers_.size(), 0.0);
  s.last_incoming.assign(tiers_.size(), 0.0);
  return s;
}

Observation LinearChain::observe(const LinearChainState& s, std::size_t k) const {
  Observation o;
  o.tier = k;
  o.week = s.period + 1;
  o.inventory_position = s.inventory_position.at(k);
  o.forecast = s.forecast.at(k);
  o.incoming_order = s.last_incoming.at(k);
  o.last_order = s.last_orders.at(k);
  o.order_delay = 0;
  o.ship_delay = 0;
  return o;
}

std::vector<double> LinearChain::advance(LinearChainState& s, double demand, std::span<const double> orders) const {
  const std::size_t n = tiers_.size();
  if (orders.size() != n) throw InputError("expected one order per tier");
  std::vector<double> incoming(n);
  for (std::size_t k = 0; k < n; ++k) {
    incoming[k] = k == 0 ? demand : orders[k - 1];
    s.inventory_position[k] += orders[k] - incoming[k];
    s.forecast[k] = tiers_[k].lambda * incoming[k] + (1.0 - tiers_[k].lambda) * s.forecast[k];
  }
  s.last_orders.assign(orders.begin(), orders.end());
  s.last_incoming = incoming;
  ++s.period;
  return incoming;
}

}  // namespace bwlab
