#include "bwlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "bwlab/error.hpp"

namespace bwlab {

GainProfile::GainProfile(std::vector<TierGain> tiers) : tiers_(std::move(tiers)) {
  if (tiers_.empty()) throw ParameterError("gain profile needs at least one tier");
  theta_floor_ = tiers_.front().theta;
  lambda_floor_ = tiers_.front().lambda;
  for (const auto& t : tiers_) {
    gains_.push_back(average_gain(t.theta, t.lambda));
    theta_floor_ = std::min(theta_floor_, t.theta);
    lambda_floor_ = std::min(lambda_floor_, t.lambda);
  }
  uniform_gain_ = average_gain(theta_floor_, lambda_floor_);
}

GainProfile GainProfile::uniform(double theta, double lambda, std::size_t tiers) {
  return GainProfile(std::vector<TierGain>(tiers, TierGain{theta, lambda}));
}

double GainProfile::gain_product(std::size_t from, std::size_t to) const {
  double p = 1.0;
  for (std::size_t r = from; r <= to; ++r) p *= gain(r);
  return p;
}

namespace {

void check_tier(std::size_t k, const GainProfile& gains) {
  if (k > gains.size()) throw InputError("tier index exceeds the gain profile");
}

double shock_variance(const std::vector<double>& v, std::size_t j) {
  if (j > v.size()) throw InputError("missing shock variance for a tier");
  const double s = v[j - 1];
  if (s < 0.0) throw InputError("shock variances must be >= 0");
  return s;
}

}  // namespace

double demand_bound(std::size_t k, double demand_variance, const GainProfile& gains) {
  check_tier(k, gains);
  return demand_variance * gains.gain_product(1, k);
}

double uniform_demand_bound(std::size_t k, double demand_variance, const GainProfile& gains) {
  check_tier(k, gains);
  return demand_variance * std::pow(gains.uniform_gain(), static_cast<double>(k));
}

double decision_bound(std::size_t k, const std::vector<double>& shock_variances, const GainProfile& gains) {
  check_tier(k, gains);
  double s = 0.0;
  for (std::size_t j = 1; j <= k; ++j) s += shock_variance(shock_variances, j) * gains.gain_product(j + 1, k);
  return 2.0 * s;
}

double uniform_decision_bound(std::size_t k, const std::vector<double>& shock_variances, const GainProfile& gains) {
  check_tier(k, gains);
  double s = 0.0;
  for (std::size_t j = 1; j <= k; ++j)
    s += shock_variance(shock_variances, j) * std::pow(gains.uniform_gain(), static_cast<double>(k - j));
  return 2.0 * s;
}

LagFilter shock_to_order_filter(std::size_t j, std::size_t k, const GainProfile& gains) {
  check_tier(k, gains);
  if (j < 1 || j > k) throw InputError("shock tier must satisfy 1 <= j <= k");
  std::vector<LagFilter> parts;
  for (std::size_t r = j + 1; r <= k; ++r) parts.push_back(tier_filter(gains.tier(r).theta, gains.tier(r).lambda));
  parts.push_back(difference_filter());
  return cascade(parts);
}

LagFilter demand_to_order_filter(std::size_t k, const GainProfile& gains) {
  check_tier(k, gains);
  if (k == 0) return LagFilter();
  std::vector<LagFilter> parts;
  for (std::size_t r = 1; r <= k; ++r) parts.push_back(tier_filter(gains.tier(r).theta, gains.tier(r).lambda));
  return cascade(parts);
}

double exact_demand_variance(std::size_t k, double demand_variance, const GainProfile& gains) {
  return demand_variance * demand_to_order_filter(k, gains).energy();
}

double exact_decision_variance(std::size_t k, const std::vector<double>& shock_variances, const GainProfile& gains) {
  double s = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const double v = shock_variance(shock_variances, j);
    if (v > 0.0) s += v * shock_to_order_filter(j, k, gains).energy();
  }
  return s;
}

std::vector<double> intertemporal_variance(std::size_t k, std::size_t horizon,
                                           const std::vector<double>& shock_variances, const GainProfile& gains) {
  check_tier(k, gains);
  if (k < 1) throw InputError("intertemporal variance needs k >= 1");
  if (horizon < 1) throw InputError("horizon must be >= 1");
  std::vector<double> w(horizon, 0.0);
  for (std::size_t j = 1; j <= k; ++j) {
    const double v = shock_variance(shock_variances, j);
    if (v == 0.0) continue;
    const auto b = shock_to_order_filter(j, k, gains).impulse_response(horizon);
    double partial = 0.0;
    for (std::size_t m = 0; m < horizon; ++m) {
      partial += b[m] * b[m];
      w[m] += v * partial;
    }
  }
  return w;
}

std::vector<BoundReport> bound_reports(const GainProfile& gains, double demand_variance,
                                       const std::vector<double>& shock_variances) {
  std::vector<BoundReport> out;
  for (std::size_t k = 1; k <= gains.size(); ++k) {
    BoundReport r;
    r.tier = k;
    r.gain = gains.gain(k);
    r.demand_variance = demand_variance;
    r.shock_variances.assign(shock_variances.begin(),
                             shock_variances.begin() + static_cast<std::ptrdiff_t>(std::min(k, shock_variances.size())));
    r.demand_bound = demand_bound(k, demand_variance, gains);
    r.uniform_demand_bound = uniform_demand_bound(k, demand_variance, gains);
    r.decision_bound = decision_bound(k, shock_variances, gains);
    r.uniform_decision_bound = uniform_decision_bound(k, shock_variances, gains);
    out.push_back(std::move(r));
  }
  return out;
}

void write_bounds_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
  os << "k,gamma_k,demand_bound,decision_bound,uniform_demand_bound,uniform_decision_bound\n";
  os << std::setprecision(12);
  for (const auto& r : reports)
    os << r.tier << ',' << r.gain << ',' << r.demand_bound << ',' << r.decision_bound << ','
       << r.uniform_demand_bound << ',' << r.uniform_decision_bound << '\n';
}

}  // namespace bwlab
