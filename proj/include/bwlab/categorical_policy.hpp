#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwlab/policy.hpp"

namespace bwlab {

// A stochastic ordering policy over the integer grid 0..max_order whose
// parameters can be trained. Actions are grid indices; index i orders i units.
class TrainablePolicy : public AgentPolicy {
 public:
  virtual std::size_t num_actions() const = 0;
  virtual const std::vector<double>& parameters() const = 0;
  virtual std::shared_ptr<const TrainablePolicy> with_parameters(std::vector<double> params) const = 0;

  // Normalized log-probabilities over the grid.
  virtual std::vector<double> log_probs(const Observation& obs) const = 0;
  // Chain rule through the logits: returns sum_b w_b * d logit_b / d params.
  virtual std::vector<double> backprop_logits(const Observation& obs, std::span<const double> logit_weights) const = 0;

  double log_prob(const Observation& obs, long action) const;
  std::vector<double> grad_log_prob(const Observation& obs, long action) const;
};

using TrainablePtr = std::shared_ptr<const TrainablePolicy>;

// logit_a = -kappa (a - mu(x))^2 / 2 with mu(x) = w . phi(x) and
// kappa = exp(-2 rho); parameters are (w_0..w_5, rho). Features:
// phi = [1, IP, backlog, incoming order, forecast, outstanding] / scale
// (the bias is not scaled).
class CategoricalOrderPolicy final : public TrainablePolicy {
 public:
  static constexpr std::size_t kFeatures = 6;

  explicit CategoricalOrderPolicy(std::vector<double> params, long max_order = 64, double feature_scale = 10.0);

  // Centred on the incoming order with standard deviation `spread`.
  static CategoricalOrderPolicy initial(double spread = 6.0, long max_order = 64, double feature_scale = 10.0);

  std::vector<double> features(const Observation& obs) const;
  double mean_order(const Observation& obs) const;
  double precision() const;  // kappa

  std::size_t num_actions() const override { return static_cast<std::size_t>(max_order_) + 1; }
  const std::vector<double>& parameters() const override { return params_; }
  std::shared_ptr<const TrainablePolicy> with_parameters(std::vector<double> params) const override;
  std::vector<double> log_probs(const Observation& obs) const override;
  std::vector<double> backprop_logits(const Observation& obs, std::span<const double> logit_weights) const override;

  Decision decide(const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "categorical"; }

  long max_order() const noexcept { return max_order_; }
  double feature_scale() const noexcept { return feature_scale_; }

 private:
  std::vector<double> params_;
  long max_order_;
  double feature_scale_;
};

// Index drawn from normalized log-probabilities by inverse CDF on one uniform.
long sample_index(std::span<const double> log_probs, Rng& rng);

struct KlResult {
  double value = 0.0;
  bool infinite = false;
  long offending_observation = -1;  // first observation with a support violation
  long offending_action = -1;
};

// KL(p || q) for log-probability vectors; infinite when q has no mass where p does.
KlResult categorical_kl(std::span<const double> log_p, std::span<const double> log_q);

// Mean exact KL(policy || reference) over the observations.
KlResult kl_penalty(const TrainablePolicy& policy, const TrainablePolicy& reference,
                    const std::vector<Observation>& observations);

// d KL(policy(.|x) || reference(.|x)) / d params at one observation.
std::vector<double> kl_gradient(const TrainablePolicy& policy, const TrainablePolicy& reference,
                                const Observation& obs);

// {"policy": "categorical", "parameters": [...], "max_order": n, "feature_scale": s, "config_hash": h}
nlohmann::json checkpoint_json(const CategoricalOrderPolicy& policy, const std::string& config_hash);
CategoricalOrderPolicy policy_from_checkpoint(const nlohmann::json& j);
CategoricalOrderPolicy load_checkpoint(const std::string& path);

}  // namespace bwlab
