#include "bwlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bwlab/error.hpp"

namespace bwlab {

void TierParams::validate() const {
  if (order_delay < 0) throw ParameterError("order_delay must be >= 0");
  if (ship_delay < 0) throw ParameterError("ship_delay must be >= 0");
  if (!(smoothing > 0.0 && smoothing <= 1.0)) throw ParameterError("smoothing must lie in (0,1]");
  if (!(target_multiplier > 0.0)) throw ParameterError("target_multiplier must be > 0");
  if (!(holding_rate >= 0.0)) throw ParameterError("holding_rate must be >= 0");
  if (!(backlog_rate >= 0.0)) throw ParameterError("backlog_rate must be >= 0");
}

double inventory_position(const TierState& tier) noexcept {
  return tier.on_hand + tier.outstanding - tier.backlog;
}

double effective_demand(const TierState& tier, double downstream_order) {
  if (!(downstream_order >= 0.0)) throw InputError("downstream order must be >= 0");
  return downstream_order + tier.backlog;
}

double ship(const TierState& tier, double receipt, double demand) noexcept {
  return std::max(0.0, std::min(tier.on_hand + receipt, demand));
}

namespace {

double pipeline_sum(const std::vector<PipelineEntry>& pipe) {
  double s = 0.0;
  for (const auto& e : pipe) s += e.quantity;
  return s;
}

// Removes and sums every entry due in `period`. Entries are kept in arrival
// order, so due entries sit at the front.
double pop_due(std::vector<PipelineEntry>& pipe, long period) {
  double total = 0.0;
  auto it = pipe.begin();
  while (it != pipe.end() && it->arrival == period) {
    total += it->quantity;
    ++it;
  }
  pipe.erase(pipe.begin(), it);
  return total;
}

void push(std::vector<PipelineEntry>& pipe, long arrival, double quantity) {
  // Delays are fixed per tier, so appends stay sorted; guard anyway because
  // snapshots can be edited by hand.
  auto pos = std::upper_bound(pipe.begin(), pipe.end(), arrival,
                              [](long a, const PipelineEntry& e) { return a < e.arrival; });
  pipe.insert(pos, PipelineEntry{arrival, quantity});
}

void check_pipeline(const std::vector<PipelineEntry>& pipe, long period, std::size_t k, const char* name) {
  for (std::size_t i = 0; i < pipe.size(); ++i) {
    if (pipe[i].arrival < period)
      throw ConsistencyError(std::string(name) + " of tier " + std::to_string(k) + " holds an entry due in period " +
                             std::to_string(pipe[i].arrival) + " < current period " + std::to_string(period));
    if (i > 0 && pipe[i].arrival < pipe[i - 1].arrival)
      throw ConsistencyError(std::string(name) + " of tier " + std::to_string(k) + " is not sorted by arrival");
  }
}

}  // namespace

double outstanding_breakdown(const ChainState& state, std::size_t k, OutstandingConvention convention) {
  const TierState& tier = state.tiers.at(k);
  double o = pipeline_sum(tier.order_pipeline) + pipeline_sum(tier.ship_pipeline);
  if (convention == OutstandingConvention::kPlacedNotReceived && k + 1 < state.tiers.size())
    o += state.tiers[k + 1].backlog;  // the upstream tier's backlog is owed entirely to k
  return o;
}

SerialChain::SerialChain(std::vector<TierParams> tiers) : tiers_(std::move(tiers)) {
  if (tiers_.empty()) throw ParameterError("a chain needs at least one tier");
  for (std::size_t k = 0; k < tiers_.size(); ++k) {
    try {
      tiers_[k].validate();
    } catch (const ParameterError& e) {
      throw ParameterError("tier " + std::to_string(k) + ": " + e.what());
    }
  }
}

ChainState SerialChain::initial_state(const InitialConditions& init) const {
  if (init.on_hand < 0 || init.backlog < 0 || init.pipeline_rate < 0)
    throw InputError("initial on_hand, backlog and pipeline_rate must be >= 0");
  ChainState s;
  s.period = 0;
  s.tiers.resize(tiers_.size());
  for (std::size_t k = 0; k < tiers_.size(); ++k) {
    TierState& t = s.tiers[k];
    t.on_hand = init.on_hand;
    t.backlog = init.backlog;
    t.forecast = init.forecast;
    for (int d = 0; d < tiers_[k].order_delay; ++d) t.order_pipeline.push_back({d, init.pipeline_rate});
    for (int d = 0; d < tiers_[k].ship_delay; ++d) t.ship_pipeline.push_back({d, init.pipeline_rate});
  }
  for (std::size_t k = 0; k < tiers_.size(); ++k) s.tiers[k].outstanding = outstanding_breakdown(s, k);
  s.last_orders.assign(tiers_.size(), init.last_order);
  s.last_incoming.assign(tiers_.size(), init.pipeline_rate);
  s.last_receipts.assign(tiers_.size(), init.pipeline_rate);
  return s;
}

std::pair<ChainState, StepOutcome> SerialChain::advance(const ChainState& state, double demand,
                                                        std::span<const double> orders) const {
  const std::size_t n = tiers_.size();
  if (state.tiers.size() != n) throw ConsistencyError("state tier count does not match the chain");
  if (orders.size() != n) throw InputError("expected one order per tier");
  if (!(demand >= 0.0) || !std::isfinite(demand)) throw InputError("demand must be finite and >= 0");
  for (double q : orders)
    if (!(q >= 0.0) || !std::isfinite(q)) throw InputError("orders must be finite and >= 0");

  const long t = state.period;
  for (std::size_t k = 0; k < n; ++k) {
    check_pipeline(state.tiers[k].order_pipeline, t, k, "order pipeline");
    check_pipeline(state.tiers[k].ship_pipeline, t, k, "ship pipeline");
  }

  ChainState next = state;
  StepOutcome out;
  out.orders.assign(orders.begin(), orders.end());
  out.incoming.assign(n, 0.0);
  out.shipments.assign(n, 0.0);
  out.receipts.assign(n, 0.0);
  out.costs.assign(n, 0.0);

  // This period's orders join the pipelines first so that zero order delays
  // are observed upstream within the same period.
  for (std::size_t k = 0; k < n; ++k) push(next.tiers[k].order_pipeline, t + tiers_[k].order_delay, orders[k]);

  // Orders arriving upstream. The top tier's orders reach the outside supplier,
  // which ships them at once.
  out.incoming[0] = demand;
  for (std::size_t k = 0; k < n; ++k) {
    double arrived = pop_due(next.tiers[k].order_pipeline, t);
    if (k + 1 < n)
      out.incoming[k + 1] = arrived;
    else
      push(next.tiers[k].ship_pipeline, t + tiers_[k].ship_delay, arrived);
  }

  // Shipments flow downstream, so settle tiers from the top; a zero ship
  // delay then lands in the same period.
  for (std::size_t kk = n; kk-- > 0;) {
    TierState& tier = next.tiers[kk];
    const double r = pop_due(tier.ship_pipeline, t);
    const double delta = out.incoming[kk] + tier.backlog;
    const double s = std::max(0.0, std::min(tier.on_hand + r, delta));
    tier.on_hand = tier.on_hand + r - s;
    tier.backlog = tier.backlog + out.incoming[kk] - s;
    tier.outstanding = tier.outstanding + orders[kk] - r;
    // Guard against -0.0 / rounding below zero on exact cancellation.
    if (tier.on_hand < 0.0) tier.on_hand = 0.0;
    if (tier.backlog < 0.0) tier.backlog = 0.0;
    out.receipts[kk] = r;
    out.shipments[kk] = s;
    if (kk > 0) push(next.tiers[kk - 1].ship_pipeline, t + tiers_[kk - 1].ship_delay, s);
  }

  for (std::size_t k = 0; k < n; ++k) {
    TierState& tier = next.tiers[k];
    const double lambda = tiers_[k].smoothing;
    tier.forecast = lambda * out.incoming[k] + (1.0 - lambda) * tier.forecast;
    out.costs[k] = tiers_[k].holding_rate * tier.on_hand + tiers_[k].backlog_rate * tier.backlog;
    out.system_cost += out.costs[k];
  }

  next.period = t + 1;
  next.last_orders = out.orders;
  next.last_incoming = out.incoming;
  next.last_receipts = out.receipts;
  next.demand_history.push_back(demand);
  return {std::move(next), std::move(out)};
}

bool audit_ip_recursion(const ChainState& before, const ChainState& after, const StepOutcome& outcome,
                        double tolerance, OutstandingConvention convention) {
  const std::size_t n = before.tiers.size();
  if (after.tiers.size() != n || outcome.orders.size() != n || outcome.incoming.size() != n) return false;
  auto ip = [&](const ChainState& s, std::size_t k) {
    const TierState& tier = s.tiers[k];
    double o = convention == OutstandingConvention::kPlacedNotReceived ? tier.outstanding
                                                                       : outstanding_breakdown(s, k, convention);
    return tier.on_hand + o - tier.backlog;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const double lhs = ip(after, k);
    const double rhs = ip(before, k) + outcome.orders[k] - outcome.incoming[k];
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (std::abs(lhs - rhs) > tolerance * scale) return false;
  }
  return true;
}

bool audit_outstanding(const ChainState& state, double tolerance) {
  for (std::size_t k = 0; k < state.tiers.size(); ++k) {
    const double expect = outstanding_breakdown(state, k);
    const double got = state.tiers[k].outstanding;
    if (std::abs(expect - got) > tolerance * std::max(1.0, std::abs(expect))) return false;
  }
  return true;
}

namespace {

nlohmann::json pipe_json(const std::vector<PipelineEntry>& pipe) {
  auto arr = nlohmann::json::array();
  for (const auto& e : pipe) arr.push_back({{"arrival", e.arrival}, {"quantity", e.quantity}});
  return arr;
}

std::vector<PipelineEntry> pipe_from_json(const nlohmann::json& j) {
  std::vector<PipelineEntry> pipe;
  for (const auto& e : j) pipe.push_back({e.at("arrival").get<long>(), e.at("quantity").get<double>()});
  return pipe;
}

}  // namespace

nlohmann::json to_json(const ChainState& state) {
  nlohmann::json j;
  j["period"] = state.period;
  auto tiers = nlohmann::json::array();
  for (const auto& t : state.tiers) {
    tiers.push_back({{"on_hand", t.on_hand},
                     {"backlog", t.backlog},
                     {"outstanding", t.outstanding},
                     {"forecast", t.forecast},
                     {"order_pipeline", pipe_json(t.order_pipeline)},
                     {"ship_pipeline", pipe_json(t.ship_pipeline)}});
  }
  j["tiers"] = std::move(tiers);
  j["last_orders"] = state.last_orders;
  j["last_incoming"] = state.last_incoming;
  j["last_receipts"] = state.last_receipts;
  j["demand_history"] = state.demand_history;
  return j;
}

ChainState chain_state_from_json(const nlohmann::json& j) {
  try {
    ChainState s;
    s.period = j.at("period").get<long>();
    for (const auto& t : j.at("tiers")) {
      TierState tier;
      tier.on_hand = t.at("on_hand").get<double>();
      tier.backlog = t.at("backlog").get<double>();
      tier.outstanding = t.at("outstanding").get<double>();
      tier.forecast = t.at("forecast").get<double>();
      tier.order_pipeline = pipe_from_json(t.at("order_pipeline"));
      tier.ship_pipeline = pipe_from_json(t.at("ship_pipeline"));
      s.tiers.push_back(std::move(tier));
    }
    s.last_orders = j.value("last_orders", std::vector<double>(s.tiers.size(), 0.0));
    s.last_incoming = j.value("last_incoming", std::vector<double>(s.tiers.size(), 0.0));
    s.last_receipts = j.value("last_receipts", std::vector<double>(s.tiers.size(), 0.0));
    s.demand_history = j.value("demand_history", std::vector<double>{});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed chain snapshot: ") + e.what());
  }
}

}  // namespace bwlab
