#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "bwlab/bounds.hpp"
#include "bwlab/scenario.hpp"

namespace bwlab {

struct ComponentEstimate {
  double value = 0.0;
  double se = 0.0;
  bool available = true;
};

// Window averages (periods >= burn_in) for one tier.
struct TierDecomposition {
  std::size_t tier = 0;  // 1-based
  ComponentEstimate total;
  ComponentEstimate demand;
  ComponentEstimate decision;
  double gap = 0.0;           // total - (demand + decision)
  double combined_se = 0.0;   // sqrt(se_total^2 + se_demand^2 + se_decision^2)
  double trend = 0.0;         // first-half minus second-half mean of the total
  double trend_se = 0.0;
  bool nonstationary = false;  // |trend| > 3 trend_se
};

struct DecompositionResult {
  std::size_t paths = 0;  // M
  std::size_t runs = 0;   // R per path
  std::size_t tiers = 0;
  std::size_t horizon = 0;
  std::size_t burn_in = 0;
  bool demand_available = true;  // false when M = 1
  // Per-period components, [tier-1][t].
  Paths total;
  Paths demand;
  Paths decision;
  std::vector<TierDecomposition> window;
};

// Nested Monte Carlo samples, orders[m][r][tier-1][t].
using NestedOrders = std::vector<std::vector<Paths>>;

// Law-of-total-variance split. Within each period:
//   decision = mean over paths of the within-path (Bessel) variance,
//   demand   = variance of path means - decision / R (bias corrected),
//   total    = pooled variance of all M R values.
// Standard errors come from a delete-one-path jackknife (delete-one-run
// when M = 1, in which case the demand part is unavailable).
DecompositionResult decompose_samples(const NestedOrders& orders, std::size_t burn_in);

// Draws M demand paths and R shock-randomized runs per path, then decomposes.
DecompositionResult decompose_variance(const ScenarioConfig& cfg, std::size_t paths, std::size_t runs,
                                       std::uint64_t seed, std::optional<std::size_t> burn_in = std::nullopt,
                                       std::size_t workers = 1);

struct BoundCheck {
  std::size_t tier = 0;
  ComponentEstimate demand;
  double demand_bound = 0.0;
  bool demand_pass = true;  // also true (vacuous) when unavailable
  ComponentEstimate decision;
  double decision_bound = 0.0;
  bool decision_pass = true;
  bool nonstationary = false;
};

// estimate >= bound - 3 se for each component and tier.
std::vector<BoundCheck> check_bounds(const DecompositionResult& d, const GainProfile& gains, double demand_variance,
                                     const std::vector<double>& shock_variances);
bool all_pass(const std::vector<BoundCheck>& checks);

// Columns: tier,period,total,demand,decision (demand empty when unavailable)
void write_decomposition_csv(std::ostream& os, const DecompositionResult& d);
// Columns: tier,total,total_se,demand,demand_se,decision,decision_se,gap,combined_se,nonstationary
void write_decomposition_summary_csv(std::ostream& os, const DecompositionResult& d);
// Columns: tier,demand,demand_se,demand_bound,demand_pass,decision,decision_se,decision_bound,decision_pass,nonstationary
void write_bound_checks_csv(std::ostream& os, const std::vector<BoundCheck>& checks);

}  // namespace bwlab
