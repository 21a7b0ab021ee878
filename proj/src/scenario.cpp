#include "bwlab/scenario.hpp"

#include <algorithm>
#include <numeric>

#include "bwlab/categorical_policy.hpp"
#include "bwlab/error.hpp"

namespace bwlab {

bool PolicySpec::operator==(const PolicySpec& o) const {
  const bool same_base = (!base && !o.base) || (base && o.base && *base == *o.base);
  return same_base && kind == o.kind && theta == o.theta && shock == o.shock && level == o.level &&
         order == o.order && low == o.low && high == o.high && samples == o.samples && remote == o.remote &&
         checkpoint == o.checkpoint && parameters == o.parameters && max_order == o.max_order &&
         spread == o.spread;
}

namespace {
constexpr PolicySpec::Kind kAllPolicyKinds[] = {
    PolicySpec::Kind::kOrderUpTo,  PolicySpec::Kind::kLinear,        PolicySpec::Kind::kBaseStock,
    PolicySpec::Kind::kConstant,   PolicySpec::Kind::kUniformRandom, PolicySpec::Kind::kMajorityVote,
    PolicySpec::Kind::kRemote,     PolicySpec::Kind::kCategorical};
}  // namespace

std::string to_string(PolicySpec::Kind kind) {
  switch (kind) {
    case PolicySpec::Kind::kOrderUpTo: return "order_up_to";
    case PolicySpec::Kind::kLinear: return "linear";
    case PolicySpec::Kind::kBaseStock: return "base_stock";
    case PolicySpec::Kind::kConstant: return "constant";
    case PolicySpec::Kind::kUniformRandom: return "uniform_random";
    case PolicySpec::Kind::kMajorityVote: return "majority_vote";
    case PolicySpec::Kind::kRemote: return "remote";
    case PolicySpec::Kind::kCategorical: return "categorical";
  }
  return "?";
}

PolicySpec::Kind policy_kind_from_string(const std::string& name) {
  for (auto k : kAllPolicyKinds)
    if (to_string(k) == name) return k;
  throw ParameterError("unknown policy kind '" + name + "'");
}

std::string to_string(Dynamics d) { return d == Dynamics::kLinear ? "linear" : "nonlinear"; }

Dynamics dynamics_from_string(const std::string& name) {
  if (name == "linear") return Dynamics::kLinear;
  if (name == "nonlinear") return Dynamics::kNonlinear;
  throw ParameterError("unknown dynamics '" + name + "' (expected linear or nonlinear)");
}

std::size_t ScenarioConfig::effective_burn_in() const {
  if (burn_in) return *burn_in;
  int lead = 0;
  for (const auto& t : tiers) lead = std::max(lead, t.lead_time());
  return static_cast<std::size_t>(5 * lead);
}

const PolicySpec& ScenarioConfig::policy_for(std::size_t k) const {
  return policies.size() == 1 ? policies.front() : policies.at(k);
}

void ScenarioConfig::validate() const {
  if (tiers.empty()) throw ParameterError("a chain needs at least one tier");
  for (const auto& t : tiers) t.validate();
  if (policies.size() != 1 && policies.size() != tiers.size())
    throw ParameterError("give one policy for all tiers or one per tier");
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  if (!(tau > 0.0)) throw ParameterError("tau must be > 0");
  demand.validate();
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    const auto& p = policy_for(k);
    if (p.kind == PolicySpec::Kind::kLinear && dynamics != Dynamics::kLinear)
      throw ParameterError("the linear policy needs linear dynamics");
    if (p.kind == PolicySpec::Kind::kMajorityVote && !p.base)
      throw ParameterError("majority_vote needs a base policy");
  }
}

PolicyPtr build_policy(const PolicySpec& spec, const TierParams& tier, std::size_t tiers) {
  const double theta = spec.theta.value_or(tier.target_multiplier);
  switch (spec.kind) {
    case PolicySpec::Kind::kOrderUpTo:
      return std::make_shared<OrderUpToPolicy>(theta, spec.shock);
    case PolicySpec::Kind::kLinear:
      return std::make_shared<LinearOrderPolicy>(theta, spec.shock);
    case PolicySpec::Kind::kBaseStock:
      return std::make_shared<BaseStockPolicy>(spec.level);
    case PolicySpec::Kind::kConstant:
      return std::make_shared<ConstantPolicy>(spec.order);
    case PolicySpec::Kind::kUniformRandom:
      return std::make_shared<UniformRandomPolicy>(spec.low, spec.high);
    case PolicySpec::Kind::kMajorityVote:
      if (!spec.base) throw ParameterError("majority_vote needs a base policy");
      return std::make_shared<MajorityVotePolicy>(build_policy(*spec.base, tier, tiers), spec.samples);
    case PolicySpec::Kind::kRemote: {
      RemoteAgentConfig rc = spec.remote;
      rc.tiers = tiers;
      return std::make_shared<RemoteAgentPolicy>(rc);
    }
    case PolicySpec::Kind::kCategorical:
      if (!spec.checkpoint.empty()) return std::make_shared<CategoricalOrderPolicy>(load_checkpoint(spec.checkpoint));
      if (!spec.parameters.empty())
        return std::make_shared<CategoricalOrderPolicy>(spec.parameters, spec.max_order);
      return std::make_shared<CategoricalOrderPolicy>(CategoricalOrderPolicy::initial(spec.spread, spec.max_order));
  }
  throw ParameterError("unhandled policy kind");
}

std::vector<PolicyPtr> build_policies(const ScenarioConfig& cfg) {
  std::vector<PolicyPtr> out;
  for (std::size_t k = 0; k < cfg.tiers.size(); ++k)
    out.push_back(build_policy(cfg.policy_for(k), cfg.tiers[k], cfg.tiers.size()));
  return out;
}

std::vector<Rng> tier_streams(std::uint64_t master, std::initializer_list<std::uint64_t> path, std::size_t tiers) {
  std::vector<Rng> out;
  const std::uint64_t base = derive_seed(master, path);
  for (std::size_t k = 0; k < tiers; ++k) out.emplace_back(derive_seed(base, {kPolicyStream, k}));
  return out;
}

GainProfile scenario_gain_profile(const ScenarioConfig& cfg) {
  std::vector<TierGain> g;
  for (std::size_t k = 0; k < cfg.tiers.size(); ++k) {
    const auto& p = cfg.policy_for(k);
    g.push_back({p.theta.value_or(cfg.tiers[k].target_multiplier), cfg.tiers[k].smoothing});
  }
  return GainProfile(std::move(g));
}

std::vector<double> scenario_shock_variances(const ScenarioConfig& cfg) {
  std::vector<double> v;
  for (std::size_t k = 0; k < cfg.tiers.size(); ++k) {
    const PolicySpec* p = &cfg.policy_for(k);
    if (p->kind == PolicySpec::Kind::kMajorityVote && p->base) p = p->base.get();
    const bool shocked = p->kind == PolicySpec::Kind::kOrderUpTo || p->kind == PolicySpec::Kind::kLinear;
    v.push_back(shocked ? p->shock.variance() : 0.0);
  }
  return v;
}

std::optional<double> demand_variance(const DemandSpec& spec) {
  switch (spec.kind) {
    case DemandSpec::Kind::kConstant: return 0.0;
    case DemandSpec::Kind::kNormal: return spec.stddev * spec.stddev;
    case DemandSpec::Kind::kPoisson: return spec.rate;
    default: return std::nullopt;
  }
}

double Trajectory::total_cost() const { return std::accumulate(system_costs.begin(), system_costs.end(), 0.0); }

double Trajectory::tier_cost(std::size_t k) const {
  return std::accumulate(costs.at(k).begin(), costs.at(k).end(), 0.0);
}

namespace {

Paths empty_paths(std::size_t n, std::size_t horizon) { return Paths(n, std::vector<double>(horizon, 0.0)); }

}  // namespace

Trajectory run_episode(const ScenarioConfig& cfg, const std::vector<PolicyPtr>& policies,
                       const std::vector<double>& demand, std::vector<Rng>& streams, const DecisionHook& hook) {
  const std::size_t n = cfg.tiers.size();
  const std::size_t horizon = demand.size();
  if (policies.size() != n || streams.size() != n) throw InputError("need one policy and one stream per tier");

  Trajectory tr;
  tr.demand = demand;
  tr.orders = empty_paths(n, horizon);
  tr.incoming = empty_paths(n, horizon);
  tr.costs = empty_paths(n, horizon);
  tr.system_costs.assign(horizon, 0.0);
  std::vector<double> orders(n);

  if (cfg.dynamics == Dynamics::kLinear) {
    std::vector<TierGain> gains;
    for (std::size_t k = 0; k < n; ++k)
      gains.push_back({cfg.policy_for(k).theta.value_or(cfg.tiers[k].target_multiplier), cfg.tiers[k].smoothing});
    const LinearChain chain(std::move(gains));
    auto state = chain.initial_state(cfg.linear_initial_position, cfg.linear_initial_forecast);
    tr.inventory_position = empty_paths(n, horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t k = 0; k < n; ++k) {
        Observation obs = chain.observe(state, k);
        obs.holding_rate = cfg.tiers[k].holding_rate;
        obs.backlog_rate = cfg.tiers[k].backlog_rate;
        const Decision d = policies[k]->decide(obs, streams[k]);
        if (hook) hook(k, t, obs, d);
        orders[k] = d.order;
      }
      const auto incoming = chain.advance(state, demand[t], orders);
      for (std::size_t k = 0; k < n; ++k) {
        tr.orders[k][t] = orders[k];
        tr.incoming[k][t] = incoming[k];
        tr.inventory_position[k][t] = state.inventory_position[k];
      }
    }
    return tr;
  }

  const SerialChain chain(cfg.tiers);
  ChainState state = chain.initial_state(cfg.initial);
  tr.on_hand = empty_paths(n, horizon);
  tr.backlog = empty_paths(n, horizon);
  tr.inventory_position = empty_paths(n, horizon);
  tr.shipments = empty_paths(n, horizon);
  tr.receipts = empty_paths(n, horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      const Observation obs = observe(chain, state, k);
      const Decision d = policies[k]->decide(obs, streams[k]);
      if (hook) hook(k, t, obs, d);
      orders[k] = d.order;
    }
    auto [next, out] = chain.advance(state, demand[t], orders);
    state = std::move(next);
    for (std::size_t k = 0; k < n; ++k) {
      tr.orders[k][t] = out.orders[k];
      tr.incoming[k][t] = out.incoming[k];
      tr.costs[k][t] = out.costs[k];
      tr.shipments[k][t] = out.shipments[k];
      tr.receipts[k][t] = out.receipts[k];
      tr.on_hand[k][t] = state.tiers[k].on_hand;
      tr.backlog[k][t] = state.tiers[k].backlog;
      tr.inventory_position[k][t] = inventory_position(state.tiers[k]);
    }
    tr.system_costs[t] = out.system_cost;
  }
  return tr;
}

}  // namespace bwlab
