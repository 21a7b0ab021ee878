#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bwlab/bounds.hpp"
#include "bwlab/chain.hpp"
#include "bwlab/demand.hpp"
#include "bwlab/linear_sim.hpp"
#include "bwlab/policy.hpp"
#include "bwlab/remote_agent.hpp"

namespace bwlab {

struct PolicySpec {
  enum class Kind { kOrderUpTo, kLinear, kBaseStock, kConstant, kUniformRandom, kMajorityVote, kRemote, kCategorical };

  Kind kind = Kind::kOrderUpTo;
  std::optional<double> theta;  // unset: the tier's target multiplier
  DecisionShockSpec shock;
  double level = 16.0;  // base_stock
  double order = 4.0;   // constant
  long low = 0, high = 16;  // uniform_random
  int samples = 10;         // majority_vote
  std::shared_ptr<PolicySpec> base;  // majority_vote
  RemoteAgentConfig remote;
  std::string checkpoint;          // categorical: file to load, or
  std::vector<double> parameters;  // inline parameters (empty: initial policy)
  long max_order = 64;
  double spread = 6.0;  // categorical initial spread

  bool operator==(const PolicySpec& o) const;
};

std::string to_string(PolicySpec::Kind kind);
PolicySpec::Kind policy_kind_from_string(const std::string& name);

enum class Dynamics { kNonlinear, kLinear };
std::string to_string(Dynamics d);
Dynamics dynamics_from_string(const std::string& name);

struct ScenarioConfig {
  std::string name = "classic";
  Dynamics dynamics = Dynamics::kNonlinear;
  std::vector<TierParams> tiers = std::vector<TierParams>(4);
  InitialConditions initial;
  double linear_initial_position = 0.0;  // linear dynamics start from zero pre-history
  double linear_initial_forecast = 0.0;
  std::vector<PolicySpec> policies = {PolicySpec{}};  // one entry broadcasts to all tiers
  DemandSpec demand;
  std::size_t horizon = 20;
  std::uint64_t seed = 1;
  std::size_t runs = 30;
  std::optional<std::size_t> burn_in;  // unset: 5 * max lead time
  double tau = 1e-9;

  std::size_t effective_burn_in() const;
  const PolicySpec& policy_for(std::size_t k) const;
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

// Random streams: demand paths and per-tier policy draws never share a seed.
enum Stream : std::uint64_t { kDemandStream = 0xD, kPolicyStream = 0xA };

PolicyPtr build_policy(const PolicySpec& spec, const TierParams& tier, std::size_t tiers);
std::vector<PolicyPtr> build_policies(const ScenarioConfig& cfg);

// Per-tier streams of one run, derived from the master seed and a path.
std::vector<Rng> tier_streams(std::uint64_t master, std::initializer_list<std::uint64_t> path, std::size_t tiers);

// (theta_k, lambda_k) of each tier and the decision-shock variances of the
// configured policies (0 for policies without an additive shock).
GainProfile scenario_gain_profile(const ScenarioConfig& cfg);
std::vector<double> scenario_shock_variances(const ScenarioConfig& cfg);
// Per-period variance of the demand regime, or nullopt when it is not i.i.d.
std::optional<double> demand_variance(const DemandSpec& spec);

// All series indexed [tier][period] (tiers 0-based, i.e. tier k+1 of the chain).
struct Trajectory {
  std::vector<double> demand;
  Paths orders;
  Paths incoming;
  Paths costs;
  Paths on_hand;
  Paths backlog;
  Paths inventory_position;  // end of period
  Paths shipments;
  Paths receipts;
  std::vector<double> system_costs;

  double total_cost() const;
  double tier_cost(std::size_t k) const;
};

using DecisionHook = std::function<void(std::size_t tier, std::size_t period, const Observation&, const Decision&)>;

// Runs one episode over the given demand path. Linear dynamics report zero
// costs and leave the physical series empty.
Trajectory run_episode(const ScenarioConfig& cfg, const std::vector<PolicyPtr>& policies,
                       const std::vector<double>& demand, std::vector<Rng>& streams,
                       const DecisionHook& hook = {});

}  // namespace bwlab
