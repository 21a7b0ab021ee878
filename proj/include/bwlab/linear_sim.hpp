#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bwlab/bounds.hpp"
#include "bwlab/policy.hpp"

namespace bwlab {

using Paths = std::vector<std::vector<double>>;  // [tier][period]

// Iterates the reduced scalar recursion of the linear benchmark
//   q_{k,t+1} = (1+tl) q_{k-1,t} - (tl+1-l) q_{k-1,t-1} + (1-l) q_{k,t}
//               + e_{k,t+1} - (2-l) e_{k,t} + (1-l) e_{k,t-1}
// from a zero pre-history. shocks[k-1] is tier k's shock path; missing
// rows are treated as zero. Returns orders for tiers 1..n as rows 0..n-1.
Paths simulate_linear(const GainProfile& tiers, std::span<const double> demand, const Paths& shocks);

// The same orders computed by applying the filters H_k and G to the inputs.
Paths orders_by_filters(const GainProfile& tiers, std::span<const double> demand, const Paths& shocks);

// State-space form of the linear benchmark: inventory positions and
// forecasts with unclamped orders and instantaneous order information.
struct LinearChainState {
  long period = 0;
  std::vector<double> inventory_position;
  std::vector<double> forecast;
  std::vector<double> last_orders;
  std::vector<double> last_incoming;
};

class LinearChain {
 public:
  explicit LinearChain(std::vector<TierGain> tiers);

  std::size_t size() const noexcept { return tiers_.size(); }
  const TierGain& tier(std::size_t k) const { return tiers_.at(k); }  // 0-based

  LinearChainState initial_state(double inventory_position = 0.0, double forecast = 0.0) const;
  Observation observe(const LinearChainState& s, std::size_t k) const;

  // IP_{k,t+1} = IP_{k,t} + q_{k,t} - q_{k-1,t}; forecast updated with q_{k-1,t}.
  // Returns the downstream orders q_{k-1,t} seen by each tier.
  std::vector<double> advance(LinearChainState& s, double demand, std::span<const double> orders) const;

 private:
  std::vector<TierGain> tiers_;
};

}  // namespace bwlab
