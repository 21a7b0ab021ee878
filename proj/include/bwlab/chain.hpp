#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace bwlab {

// Per-tier parameters of a serial chain. The lead time is split into the
// delay for an order to reach the upstream tier and the delay for the
// resulting shipment to come back.
struct TierParams {
  int order_delay = 1;
  int ship_delay = 2;
  double smoothing = 0.5;          // forecast smoothing lambda, in (0,1]
  double target_multiplier = 4.0;  // theta, > 0
  double holding_rate = 0.5;
  double backlog_rate = 1.0;

  int lead_time() const noexcept { return order_delay + ship_delay; }

  // Throws ParameterError naming the offending field.
  void validate() const;

  bool operator==(const TierParams&) const = default;
};

struct PipelineEntry {
  long arrival = 0;  // period in which the quantity arrives
  double quantity = 0.0;

  bool operator==(const PipelineEntry&) const = default;
};

struct TierState {
  double on_hand = 0.0;
  double backlog = 0.0;      // owed to the downstream tier
  double outstanding = 0.0;  // placed by this tier, not yet received
  double forecast = 0.0;     // smoothed forecast of downstream orders
  std::vector<PipelineEntry> order_pipeline;  // own orders travelling upstream
  std::vector<PipelineEntry> ship_pipeline;   // shipments travelling to this tier

  bool operator==(const TierState&) const = default;
};

// Full physical state at the start of `period`. Index 0 is the most
// downstream tier (retailer); customer demand is the implicit tier before it.
struct ChainState {
  long period = 0;
  std::vector<TierState> tiers;
  std::vector<double> last_orders;    // q_{k,t-1}
  std::vector<double> last_incoming;  // downstream order observed in t-1
  std::vector<double> last_receipts;  // delivery received in t-1
  std::vector<double> demand_history;

  std::size_t size() const noexcept { return tiers.size(); }
  bool operator==(const ChainState&) const = default;
};

struct StepOutcome {
  std::vector<double> orders;     // q_{k,t}
  std::vector<double> incoming;   // downstream order observed by tier k in t
  std::vector<double> shipments;  // s_{k,t}
  std::vector<double> receipts;   // r_{k,t}
  std::vector<double> costs;      // c_{k,t}, on end-of-period stock
  double system_cost = 0.0;
};

struct InitialConditions {
  double on_hand = 12.0;
  double backlog = 0.0;
  double pipeline_rate = 4.0;  // per-period quantity pre-filled into pipelines
  double forecast = 4.0;
  double last_order = 4.0;

  bool operator==(const InitialConditions&) const = default;
};

double inventory_position(const TierState& tier) noexcept;

// Delta_{k,t} = q_{k-1,t} + B_{k,t}. Throws InputError on a negative order.
double effective_demand(const TierState& tier, double downstream_order);

// s = min(OH + r, demand), never negative.
double ship(const TierState& tier, double receipt, double demand) noexcept;

// Which quantities the audit treats as "outstanding" when recomputing the
// inventory position.
enum class OutstandingConvention {
  // Everything placed but not received: both pipelines plus the upstream
  // backlog owed to the tier. This is the convention the state carries.
  kPlacedNotReceived,
  // Only quantities physically in a pipeline; upstream backlog excluded.
  kPipelineOnly,
};

// Recomputes O_k for tier k from pipelines (and upstream backlog under the
// default convention).
double outstanding_breakdown(const ChainState& state, std::size_t k,
                             OutstandingConvention convention = OutstandingConvention::kPlacedNotReceived);

class SerialChain {
 public:
  explicit SerialChain(std::vector<TierParams> tiers);

  std::size_t size() const noexcept { return tiers_.size(); }
  const TierParams& tier(std::size_t k) const { return tiers_.at(k); }
  const std::vector<TierParams>& tiers() const noexcept { return tiers_; }

  ChainState initial_state(const InitialConditions& init = {}) const;

  // One period: receive, observe downstream order, ship, update OH/B/O and
  // forecasts, enqueue this period's orders. Pure in (state, demand, orders).
  std::pair<ChainState, StepOutcome> advance(const ChainState& state, double demand,
                                             std::span<const double> orders) const;

 private:
  std::vector<TierParams> tiers_;
};

// IP_{k,t+1} == IP_{k,t} + q_{k,t} - q_{k-1,t} for every tier, within `tolerance`
// (0 demands bit-exact equality).
bool audit_ip_recursion(const ChainState& before, const ChainState& after, const StepOutcome& outcome,
                        double tolerance = 0.0,
                        OutstandingConvention convention = OutstandingConvention::kPlacedNotReceived);

// True when every tier's carried O equals the pipeline/backlog breakdown.
bool audit_outstanding(const ChainState& state, double tolerance = 1e-9);

// Snapshot schema:
// { "period": int, "last_orders": [..], "last_incoming": [..], "last_receipts": [..],
//   "demand_history": [..],
//   "tiers": [ { "on_hand", "backlog", "outstanding", "forecast",
//                "order_pipeline": [ {"arrival": int, "quantity": num}, .. ],
//                "ship_pipeline":  [ .. ] }, .. ] }
nlohmann::json to_json(const ChainState& state);
ChainState chain_state_from_json(const nlohmann::json& j);

}  // namespace bwlab
