#include "bwlab/categorical_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "bwlab/error.hpp"

namespace bwlab {

double TrainablePolicy::log_prob(const Observation& obs, long action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= num_actions())
    return -std::numeric_limits<double>::infinity();
  return log_probs(obs)[static_cast<std::size_t>(action)];
}

std::vector<double> TrainablePolicy::grad_log_prob(const Observation& obs, long action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= num_actions())
    throw InputError("action outside the order grid");
  auto w = log_probs(obs);
  for (auto& v : w) v = -std::exp(v);
  w[static_cast<std::size_t>(action)] += 1.0;
  return backprop_logits(obs, w);
}

CategoricalOrderPolicy::CategoricalOrderPolicy(std::vector<double> params, long max_order, double feature_scale)
    : params_(std::move(params)), max_order_(max_order), feature_scale_(feature_scale) {
  if (params_.size() != kFeatures + 1) throw ParameterError("categorical policy needs 7 parameters");
  if (max_order_ < 1) throw ParameterError("max_order must be >= 1");
  if (!(feature_scale_ > 0.0)) throw ParameterError("feature_scale must be > 0");
  for (double p : params_)
    if (!std::isfinite(p)) throw ParameterError("policy parameters must be finite");
}

CategoricalOrderPolicy CategoricalOrderPolicy::initial(double spread, long max_order, double feature_scale) {
  if (!(spread > 0.0)) throw ParameterError("initial spread must be > 0");
  std::vector<double> p(kFeatures + 1, 0.0);
  p[3] = feature_scale;  // mu = incoming order
  p[kFeatures] = std::log(spread);
  return CategoricalOrderPolicy(std::move(p), max_order, feature_scale);
}

std::vector<double> CategoricalOrderPolicy::features(const Observation& obs) const {
  const double s = feature_scale_;
  return {1.0, obs.inventory_position / s, obs.backlog / s, obs.incoming_order / s, obs.forecast / s,
          obs.outstanding / s};
}

double CategoricalOrderPolicy::mean_order(const Observation& obs) const {
  const auto phi = features(obs);
  double mu = 0.0;
  for (std::size_t i = 0; i < kFeatures; ++i) mu += params_[i] * phi[i];
  return mu;
}

double CategoricalOrderPolicy::precision() const { return std::exp(-2.0 * params_[kFeatures]); }

std::shared_ptr<const TrainablePolicy> CategoricalOrderPolicy::with_parameters(std::vector<double> params) const {
  return std::make_shared<CategoricalOrderPolicy>(std::move(params), max_order_, feature_scale_);
}

std::vector<double> CategoricalOrderPolicy::log_probs(const Observation& obs) const {
  const double mu = mean_order(obs);
  const double kappa = precision();
  std::vector<double> lp(num_actions());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < lp.size(); ++a) {
    const double d = static_cast<double>(a) - mu;
    lp[a] = -0.5 * kappa * d * d;
    top = std::max(top, lp[a]);
  }
  double z = 0.0;
  for (double v : lp) z += std::exp(v - top);
  const double lse = top + std::log(z);
  for (auto& v : lp) v -= lse;
  return lp;
}

std::vector<double> CategoricalOrderPolicy::backprop_logits(const Observation& obs,
                                                            std::span<const double> logit_weights) const {
  if (logit_weights.size() != num_actions()) throw InputError("logit weight vector has the wrong size");
  const double mu = mean_order(obs);
  const double kappa = precision();
  // d logit_b / d mu = kappa (b - mu); d logit_b / d rho = kappa (b - mu)^2.
  double d_mu = 0.0, d_rho = 0.0;
  for (std::size_t b = 0; b < logit_weights.size(); ++b) {
    const double d = static_cast<double>(b) - mu;
    d_mu += logit_weights[b] * kappa * d;
    d_rho += logit_weights[b] * kappa * d * d;
  }
  const auto phi = features(obs);
  std::vector<double> g(kFeatures + 1);
  for (std::size_t i = 0; i < kFeatures; ++i) g[i] = d_mu * phi[i];
  g[kFeatures] = d_rho;
  return g;
}

Decision CategoricalOrderPolicy::decide(const Observation& obs, Rng& rng) const {
  const auto lp = log_probs(obs);
  const long a = sample_index(lp, rng);
  return {static_cast<double>(a), lp[static_cast<std::size_t>(a)]};
}

long sample_index(std::span<const double> log_probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  long last_positive = 0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const double p = std::exp(log_probs[i]);
    if (p > 0.0) last_positive = static_cast<long>(i);
    acc += p;
    if (u < acc) return static_cast<long>(i);
  }
  return last_positive;  // rounding left u just above the total mass
}

KlResult categorical_kl(std::span<const double> log_p, std::span<const double> log_q) {
  if (log_p.size() != log_q.size()) throw InputError("KL needs distributions on the same support");
  KlResult r;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    const double p = std::exp(log_p[i]);
    if (p == 0.0) continue;
    if (!std::isfinite(log_q[i])) {
      r.infinite = true;
      r.offending_action = static_cast<long>(i);
      r.value = std::numeric_limits<double>::infinity();
      return r;
    }
    r.value += p * (log_p[i] - log_q[i]);
  }
  r.value = std::max(r.value, 0.0);
  return r;
}

KlResult kl_penalty(const TrainablePolicy& policy, const TrainablePolicy& reference,
                    const std::vector<Observation>& observations) {
  if (observations.empty()) throw InsufficientSampleError("KL penalty over no observations");
  KlResult total;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto r = categorical_kl(policy.log_probs(observations[i]), reference.log_probs(observations[i]));
    if (r.infinite) {
      KlResult bad = r;
      bad.offending_observation = static_cast<long>(i);
      return bad;
    }
    total.value += r.value;
  }
  total.value /= static_cast<double>(observations.size());
  return total;
}

std::vector<double> kl_gradient(const TrainablePolicy& policy, const TrainablePolicy& reference,
                                const Observation& obs) {
  const auto lp = policy.log_probs(obs);
  const auto lq = reference.log_probs(obs);
  const auto kl = categorical_kl(lp, lq);
  if (kl.infinite) throw ConsistencyError("KL gradient undefined: reference lacks support");
  // d KL / d logit_b = p_b (log p_b - log q_b - KL)
  std::vector<double> w(lp.size());
  for (std::size_t b = 0; b < lp.size(); ++b) {
    const double p = std::exp(lp[b]);
    w[b] = p == 0.0 ? 0.0 : p * (lp[b] - lq[b] - kl.value);
  }
  return policy.backprop_logits(obs, w);
}

nlohmann::json checkpoint_json(const CategoricalOrderPolicy& policy, const std::string& config_hash) {
  return {{"policy", "categorical"},
          {"parameters", policy.parameters()},
          {"max_order", policy.max_order()},
          {"feature_scale", policy.feature_scale()},
          {"config_hash", config_hash}};
}

CategoricalOrderPolicy policy_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("policy").get<std::string>() != "categorical") throw InputError("checkpoint is not a categorical policy");
    return CategoricalOrderPolicy(j.at("parameters").get<std::vector<double>>(), j.at("max_order").get<long>(),
                                  j.at("feature_scale").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

CategoricalOrderPolicy load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return policy_from_checkpoint(j);
}

}  // namespace bwlab
