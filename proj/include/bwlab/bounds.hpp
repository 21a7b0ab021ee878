#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "bwlab/lag_filter.hpp"

namespace bwlab {

struct TierGain {
  double theta = 1.0;
  double lambda = 1.0;
};

// Per-tier (theta_k, lambda_k) with their average gains, plus the uniform
// lower-bound parameters theta = min theta_k, lambda = min lambda_k.
class GainProfile {
 public:
  explicit GainProfile(std::vector<TierGain> tiers);
  static GainProfile uniform(double theta, double lambda, std::size_t tiers);

  std::size_t size() const noexcept { return tiers_.size(); }
  const TierGain& tier(std::size_t k) const { return tiers_.at(k - 1); }  // 1-based
  double gain(std::size_t k) const { return gains_.at(k - 1); }           // Gamma_k, 1-based
  double theta_floor() const noexcept { return theta_floor_; }
  double lambda_floor() const noexcept { return lambda_floor_; }
  double uniform_gain() const noexcept { return uniform_gain_; }  // Gamma

  // prod_{r=from..to} Gamma_r (empty product = 1), 1-based inclusive.
  double gain_product(std::size_t from, std::size_t to) const;

 private:
  std::vector<TierGain> tiers_;
  std::vector<double> gains_;
  double theta_floor_ = 0.0;
  double lambda_floor_ = 1.0;
  double uniform_gain_ = 1.0;
};

// sigma_D^2 * prod_{r<=k} Gamma_r; k = 0 gives sigma_D^2.
double demand_bound(std::size_t k, double demand_variance, const GainProfile& gains);
// sigma_D^2 * Gamma^k with the uniform floor Gamma.
double uniform_demand_bound(std::size_t k, double demand_variance, const GainProfile& gains);

// 2 * sum_{j<=k} sigma_j^2 * prod_{r=j+1..k} Gamma_r. shock_variances[j-1] = sigma_j^2.
double decision_bound(std::size_t k, const std::vector<double>& shock_variances, const GainProfile& gains);
// 2 * sum_{j<=k} sigma_j^2 * Gamma^{k-j}.
double uniform_decision_bound(std::size_t k, const std::vector<double>& shock_variances, const GainProfile& gains);

// Filter mapping tier-j shocks into tier-k orders: H_{j+1} ... H_k G.
LagFilter shock_to_order_filter(std::size_t j, std::size_t k, const GainProfile& gains);
// Filter mapping demand into tier-k orders: H_1 ... H_k.
LagFilter demand_to_order_filter(std::size_t k, const GainProfile& gains);

// Exact stationary variances of the linear benchmark (through filter
// energies), used to show how tight the bounds are.
double exact_demand_variance(std::size_t k, double demand_variance, const GainProfile& gains);
double exact_decision_variance(std::size_t k, const std::vector<double>& shock_variances, const GainProfile& gains);

// W_{k,1..T}: conditional order variance of tier k after t periods of shocks
// from a zero shock pre-history.
std::vector<double> intertemporal_variance(std::size_t k, std::size_t horizon,
                                           const std::vector<double>& shock_variances, const GainProfile& gains);

struct BoundReport {
  std::size_t tier = 0;
  double gain = 1.0;  // Gamma_k
  double demand_bound = 0.0;
  double uniform_demand_bound = 0.0;
  double decision_bound = 0.0;
  double uniform_decision_bound = 0.0;
  double demand_variance = 0.0;
  std::vector<double> shock_variances;
};

std::vector<BoundReport> bound_reports(const GainProfile& gains, double demand_variance,
                                       const std::vector<double>& shock_variances);

// Columns: k,gamma_k,demand_bound,decision_bound,uniform_demand_bound,uniform_decision_bound
void write_bounds_csv(std::ostream& os, const std::vector<BoundReport>& reports);

}  // namespace bwlab
