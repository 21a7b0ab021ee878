#include "bwlab/grpo.hpp"

#include <cmath>
#include <iomanip>

#include "bwlab/error.hpp"
#include "bwlab/parallel.hpp"

namespace bwlab {

std::string to_string(RewardSpec::Scope s) { return s == RewardSpec::Scope::kSystem ? "system" : "agent"; }

std::string to_string(RewardSpec::Attribution a) {
  return a == RewardSpec::Attribution::kEpisode ? "episode" : "reward_to_go";
}

RewardSpec::Scope reward_scope_from_string(const std::string& s) {
  if (s == "system") return RewardSpec::Scope::kSystem;
  if (s == "agent") return RewardSpec::Scope::kAgent;
  throw ParameterError("unknown reward scope '" + s + "' (expected system or agent)");
}

RewardSpec::Attribution attribution_from_string(const std::string& s) {
  if (s == "episode") return RewardSpec::Attribution::kEpisode;
  if (s == "reward_to_go") return RewardSpec::Attribution::kRewardToGo;
  throw ParameterError("unknown attribution '" + s + "' (expected episode or reward_to_go)");
}

Paths assign_rewards(const Paths& costs, const RewardSpec& spec) {
  const std::size_t n = costs.size();
  if (n == 0) return {};
  const std::size_t T = costs.front().size();
  for (const auto& row : costs) {
    if (row.size() != T) throw InputError("cost table is ragged");
    for (double c : row)
      if (!std::isfinite(c) || c < 0.0) throw InputError("costs must be finite and >= 0");
  }
  // Per-period cost series that each agent is scored on.
  Paths basis = costs;
  if (spec.scope == RewardSpec::Scope::kSystem) {
    std::vector<double> sys(T, 0.0);
    for (const auto& row : costs)
      for (std::size_t t = 0; t < T; ++t) sys[t] += row[t];
    basis.assign(n, sys);
  }
  Paths rewards(n, std::vector<double>(T));
  for (std::size_t k = 0; k < n; ++k) {
    double suffix = 0.0;
    for (std::size_t t = T; t-- > 0;) {
      suffix += basis[k][t];
      rewards[k][t] = -suffix;
    }
    if (spec.attribution == RewardSpec::Attribution::kEpisode)
      for (std::size_t t = 0; t < T; ++t) rewards[k][t] = -suffix;
  }
  return rewards;
}

std::vector<Paths> group_advantages(const std::vector<Paths>& rewards, double eps) {
  const std::size_t G = rewards.size();
  if (G < 2) throw InsufficientSampleError("group advantages need G >= 2 episodes");
  if (!(eps > 0.0)) throw ParameterError("eps_norm must be > 0");
  const std::size_t n = rewards.front().size();
  const std::size_t T = n ? rewards.front().front().size() : 0;
  std::vector<Paths> adv(G, Paths(n, std::vector<double>(T)));
  std::vector<double> cell(G);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < G; ++i) cell[i] = rewards.at(i).at(k).at(t);
      const double m = mean(cell);
      const double s = population_stddev(cell);
      for (std::size_t i = 0; i < G; ++i) adv[i][k][t] = (cell[i] - m) / (s + eps);
    }
  return adv;
}

std::vector<Observation> GroupBatch::all_observations() const {
  std::vector<Observation> out;
  out.reserve(decisions());
  for (const auto& ep : observations)
    for (const auto& tier : ep) out.insert(out.end(), tier.begin(), tier.end());
  return out;
}

namespace {

template <typename Fn>
void for_each_decision(const GroupBatch& b, Fn&& fn) {
  for (std::size_t i = 0; i < b.group_size; ++i)
    for (std::size_t k = 0; k < b.tiers; ++k)
      for (std::size_t t = 0; t < b.horizon; ++t) fn(i, k, t);
}

double norm2(const std::vector<double>& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> grpo_gradient(const TrainablePolicy& policy, const TrainablePolicy& reference,
                                  const GroupBatch& batch, double beta) {
  const double N = static_cast<double>(batch.decisions());
  if (N == 0.0) throw InsufficientSampleError("empty batch");
  std::vector<double> grad(policy.parameters().size(), 0.0);
  for_each_decision(batch, [&](std::size_t i, std::size_t k, std::size_t t) {
    const Observation& obs = batch.observations[i][k][t];
    const long a = batch.actions[i][k][t];
    const double adv = batch.advantages[i][k][t];
    const auto lp = policy.log_probs(obs);
    std::vector<double> w(lp.size());
    for (std::size_t b = 0; b < lp.size(); ++b) w[b] = -adv * std::exp(lp[b]);
    w.at(static_cast<std::size_t>(a)) += adv;
    if (beta != 0.0) {
      const auto lq = reference.log_probs(obs);
      const auto kl = categorical_kl(lp, lq);
      if (kl.infinite) throw ConsistencyError("reference policy lacks support on the order grid");
      for (std::size_t b = 0; b < lp.size(); ++b) {
        const double p = std::exp(lp[b]);
        if (p > 0.0) w[b] -= beta * p * (lp[b] - lq[b] - kl.value);
      }
    }
    const auto g = policy.backprop_logits(obs, w);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
  });
  for (auto& v : grad) v /= N;
  return grad;
}

double grpo_objective(const TrainablePolicy& policy, const TrainablePolicy& reference, const GroupBatch& batch,
                      double beta) {
  double s = 0.0;
  for_each_decision(batch, [&](std::size_t i, std::size_t k, std::size_t t) {
    const Observation& obs = batch.observations[i][k][t];
    const auto lp = policy.log_probs(obs);
    s += batch.advantages[i][k][t] * lp.at(static_cast<std::size_t>(batch.actions[i][k][t]));
    if (beta != 0.0) s -= beta * categorical_kl(lp, reference.log_probs(obs)).value;
  });
  return s / static_cast<double>(batch.decisions());
}

std::string to_string(GrpoHyper::Optimizer o) { return o == GrpoHyper::Optimizer::kAdam ? "adam" : "sgd"; }

GrpoHyper::Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return GrpoHyper::Optimizer::kSgd;
  if (s == "adam") return GrpoHyper::Optimizer::kAdam;
  throw ParameterError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

StepResult grpo_step(const TrainablePtr& policy, const TrainablePolicy& reference, const GroupBatch& batch,
                     const GrpoHyper& hyper, AdamState* adam) {
  StepResult res{policy, {}};
  auto& dx = res.diagnostics;
  const auto obs = batch.all_observations();
  dx.kl_before = kl_penalty(*policy, reference, obs).value;

  std::vector<double> g;
  try {
    g = grpo_gradient(*policy, reference, batch, hyper.beta);
  } catch (const ConsistencyError& e) {
    dx.aborted = true;
    dx.message = e.what();
    return res;
  }
  dx.grad_norm = norm2(g);
  if (!std::isfinite(dx.grad_norm)) {
    dx.aborted = true;
    dx.message = "non-finite gradient; step skipped";
    dx.kl_after = dx.kl_before;
    return res;
  }
  if (hyper.clip_norm > 0.0 && dx.grad_norm > hyper.clip_norm) {
    for (auto& v : g) v *= hyper.clip_norm / dx.grad_norm;
    dx.clipped = true;
  }
  std::vector<double> params = policy->parameters();
  if (hyper.optimizer == GrpoHyper::Optimizer::kAdam) {
    if (!adam) throw InputError("the adam optimizer needs a state object");
    if (adam->m.empty()) {
      adam->m.assign(params.size(), 0.0);
      adam->v.assign(params.size(), 0.0);
    }
    ++adam->steps;
    const double c1 = 1.0 - std::pow(hyper.adam_beta1, static_cast<double>(adam->steps));
    const double c2 = 1.0 - std::pow(hyper.adam_beta2, static_cast<double>(adam->steps));
    for (std::size_t j = 0; j < params.size(); ++j) {
      adam->m[j] = hyper.adam_beta1 * adam->m[j] + (1.0 - hyper.adam_beta1) * g[j];
      adam->v[j] = hyper.adam_beta2 * adam->v[j] + (1.0 - hyper.adam_beta2) * g[j] * g[j];
      params[j] += hyper.learning_rate * (adam->m[j] / c1) / (std::sqrt(adam->v[j] / c2) + hyper.adam_eps);
    }
  } else {
    for (std::size_t j = 0; j < params.size(); ++j) params[j] += hyper.learning_rate * g[j];
  }
  res.policy = policy->with_parameters(std::move(params));

  for_each_decision(batch, [&](std::size_t i, std::size_t k, std::size_t t) {
    const Observation& o = batch.observations[i][k][t];
    const long a = batch.actions[i][k][t];
    const double before = policy->log_prob(o, a);
    const double after = res.policy->log_prob(o, a);
    dx.surrogate += batch.advantages[i][k][t] * before;
    dx.logp_shift += batch.advantages[i][k][t] * (after - before);
  });
  dx.surrogate /= static_cast<double>(batch.decisions());
  dx.logp_shift /= static_cast<double>(batch.decisions());
  dx.kl_after = kl_penalty(*res.policy, reference, obs).value;
  return res;
}

void TrainingSpec::validate() const {
  if (group_size < 2) throw ParameterError("group_size must be >= 2");
  if (!(hyper.beta >= 0.0)) throw ParameterError("beta must be >= 0");
  if (!(hyper.learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  if (!(eps_norm > 0.0)) throw ParameterError("eps_norm must be > 0");
  if (!(initial_spread > 0.0)) throw ParameterError("initial_spread must be > 0");
  if (max_order < 1) throw ParameterError("max_order must be >= 1");
  if (eval_runs < 2) throw ParameterError("eval_runs must be >= 2");
  curriculum.validate();
}

std::string to_string(TrainingSpec::DemandSource s) {
  return s == TrainingSpec::DemandSource::kCurriculum ? "curriculum" : "scenario";
}

TrainingSpec::DemandSource demand_source_from_string(const std::string& s) {
  if (s == "curriculum") return TrainingSpec::DemandSource::kCurriculum;
  if (s == "scenario") return TrainingSpec::DemandSource::kScenario;
  throw ParameterError("unknown demand_source '" + s + "' (expected curriculum or scenario)");
}

GroupBatch collect_group(const TrainablePolicy& policy, const ScenarioConfig& env, const TrainingSpec& spec,
                         std::uint64_t seed, std::size_t step, std::size_t workers) {
  if (env.dynamics != Dynamics::kNonlinear) throw ParameterError("training runs on the physical chain");
  const std::size_t G = spec.group_size;
  const std::size_t n = env.tiers.size();
  const std::size_t T = env.horizon;
  // Non-owning handle: the caller keeps the policy alive for the rollout.
  const PolicyPtr shared(&policy, [](const AgentPolicy*) {});
  const std::vector<PolicyPtr> policies(n, shared);

  GroupBatch b;
  b.group_size = G;
  b.tiers = n;
  b.horizon = T;
  b.costs.resize(G);
  b.observations.assign(G, std::vector<std::vector<Observation>>(n, std::vector<Observation>(T)));
  b.actions.assign(G, std::vector<std::vector<long>>(n, std::vector<long>(T)));
  b.log_probs.assign(G, Paths(n, std::vector<double>(T)));
  b.episode_costs.assign(G, 0.0);

  parallel_for(G, workers, [&](std::size_t i) {
    const std::uint64_t demand_seed = spec.curriculum.resample_per_episode
                                          ? derive_seed(seed, {kDemandStream, step, i})
                                          : derive_seed(seed, {kDemandStream, step});
    Rng demand_rng(demand_seed);
    const auto demand = spec.demand_source == TrainingSpec::DemandSource::kCurriculum
                            ? spec.curriculum.sample(T, demand_rng)
                            : env.demand.generate(T, demand_rng);
    auto streams = tier_streams(seed, {step, i}, n);
    const auto tr = run_episode(env, policies, demand, streams,
                                [&](std::size_t k, std::size_t t, const Observation& o, const Decision& d) {
                                  b.observations[i][k][t] = o;
                                  b.actions[i][k][t] = std::lround(d.order);
                                  b.log_probs[i][k][t] = d.log_prob.value_or(0.0);
                                });
    b.costs[i] = tr.costs;
    b.episode_costs[i] = tr.total_cost();
  });
  b.rewards.reserve(G);
  for (const auto& c : b.costs) b.rewards.push_back(assign_rewards(c, spec.reward));
  b.advantages = group_advantages(b.rewards, spec.eps_norm);
  return b;
}

TrainResult train(const ScenarioConfig& env, const TrainingSpec& spec, std::uint64_t seed, TrainablePtr initial,
                  std::size_t workers) {
  spec.validate();
  env.validate();
  TrainResult res;
  res.reference = initial ? initial
                          : std::make_shared<CategoricalOrderPolicy>(
                                CategoricalOrderPolicy::initial(spec.initial_spread, spec.max_order));
  res.policy = res.reference;
  AdamState adam;
  for (std::size_t s = 0; s < spec.steps; ++s) {
    const GroupBatch batch = collect_group(*res.policy, env, spec, seed, s, workers);
    StepResult step = grpo_step(res.policy, *res.reference, batch, spec.hyper, &adam);
    TrainLogRow row;
    row.step = s + 1;
    row.mean_cost = mean(batch.episode_costs);
    row.std_cost = population_stddev(batch.episode_costs);
    row.kl = step.diagnostics.kl_before;
    row.grad_norm = step.diagnostics.grad_norm;
    row.clipped = step.diagnostics.clipped;
    row.logp_shift = step.diagnostics.logp_shift;
    row.aborted = step.diagnostics.aborted;
    res.log.push_back(row);
    res.policy = step.policy;
  }
  return res;
}

void write_training_log_csv(std::ostream& os, const std::vector<TrainLogRow>& log) {
  os << "step,mean_cost,std_cost,kl,grad_norm,clipped,logp_shift,aborted\n" << std::setprecision(12);
  for (const auto& r : log)
    os << r.step << ',' << r.mean_cost << ',' << r.std_cost << ',' << r.kl << ',' << r.grad_norm << ','
       << (r.clipped ? 1 : 0) << ',' << r.logp_shift << ',' << (r.aborted ? 1 : 0) << '\n';
}

EvaluationReport evaluate(const PolicyPtr& policy, const ScenarioConfig& scenario, std::size_t runs,
                          std::uint64_t seed, std::size_t workers) {
  return evaluate(std::vector<PolicyPtr>(scenario.tiers.size(), policy), scenario, runs, seed, workers);
}

EvaluationReport evaluate(const std::vector<PolicyPtr>& policies, const ScenarioConfig& scenario, std::size_t runs,
                          std::uint64_t seed, std::size_t workers) {
  EvaluationReport rep;
  rep.record = run_ensemble(scenario, policies, runs, seed, workers);
  const auto& totals = rep.record.total_costs;
  rep.mean_cost = mean(totals);
  rep.std_cost = std::sqrt(sample_variance(totals));
  rep.max_cost = *std::max_element(totals.begin(), totals.end());
  rep.cv = rep.mean_cost > 0.0 ? rep.std_cost / rep.mean_cost : 0.0;
  rep.agent_mean_costs.assign(rep.record.tiers, 0.0);
  for (const auto& run : rep.record.costs)
    for (std::size_t k = 0; k < run.size(); ++k)
      for (double c : run[k]) rep.agent_mean_costs[k] += c / static_cast<double>(rep.record.runs());
  rep.metrics = bullwhip_metrics(rep.record, scenario.tau);
  return rep;
}

}  // namespace bwlab
