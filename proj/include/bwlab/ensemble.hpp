#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "bwlab/scenario.hpp"
#include "bwlab/stats.hpp"

namespace bwlab {

struct ExcludedRun {
  std::size_t run = 0;
  std::string reason;
  bool operator==(const ExcludedRun&) const = default;
};

// R repeated runs of one scenario. Only successful runs are stored; their
// original indices are in run_ids.
struct EnsembleRecord {
  std::size_t tiers = 0;
  std::size_t horizon = 0;
  std::uint64_t master_seed = 0;
  bool shared_demand = false;  // every run used the same demand path
  std::vector<std::size_t> run_ids;
  std::vector<std::uint64_t> run_seeds;
  std::vector<Paths> orders;  // [run][tier][period]
  std::vector<Paths> costs;   // [run][tier][period]
  std::vector<std::vector<double>> demand;  // [run][period]
  std::vector<double> total_costs;          // per run
  std::vector<ExcludedRun> excluded;

  std::size_t runs() const noexcept { return orders.size(); }
  // Tier 0 is demand; tiers 1..n are orders.
  double value(std::size_t run, std::size_t tier, std::size_t period) const;
  bool operator==(const EnsembleRecord&) const = default;
};

// Runs cfg R times from the master seed. Runs whose remote agent exhausts its
// budget are excluded; RemoteBudgetExceeded is raised when fewer than two
// runs survive. Output is ordered by run index whatever the worker count.
EnsembleRecord run_ensemble(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t seed,
                            std::size_t workers = 1);
EnsembleRecord run_ensemble(const ScenarioConfig& cfg, const std::vector<PolicyPtr>& policies, std::size_t runs,
                            std::uint64_t seed, std::size_t workers = 1);

// Demand path of run r (shared across runs for deterministic or fixed regimes).
std::vector<double> run_demand(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t run);

// sigma^2_{k,t} across runs (Bessel), rows 0..n with row 0 the demand.
Paths run_to_run_variance(const EnsembleRecord& e);

// Mean over t >= burn_in of sigma^2_{k,t} with a delete-one-run jackknife
// standard error. Tier 0 is demand.
VarianceEstimate stationary_variance(const EnsembleRecord& e, std::size_t tier, std::size_t burn_in);

// Window mean over [begin, end) of the across-run variance of x[r][t], with
// a delete-one-run jackknife standard error.
VarianceEstimate window_run_variance(const std::vector<const std::vector<double>*>& runs, std::size_t begin,
                                     std::size_t end);

// Columns: run,tier,period,order,cost
void write_orders_csv(std::ostream& os, const EnsembleRecord& e);
// Columns: run,period,demand
void write_demand_csv(std::ostream& os, const EnsembleRecord& e);
// Columns: tier,period,sigma2 (periods >= from)
void write_variance_csv(std::ostream& os, const Paths& sigma2, std::size_t from = 0);

}  // namespace bwlab
