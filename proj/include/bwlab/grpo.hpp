#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "bwlab/categorical_policy.hpp"
#include "bwlab/demand.hpp"
#include "bwlab/ensemble.hpp"
#include "bwlab/metrics.hpp"
#include "bwlab/scenario.hpp"

namespace bwlab {

struct RewardSpec {
  enum class Scope { kSystem, kAgent };
  enum class Attribution { kEpisode, kRewardToGo };

  Scope scope = Scope::kAgent;
  Attribution attribution = Attribution::kRewardToGo;

  bool operator==(const RewardSpec&) const = default;
};

std::string to_string(RewardSpec::Scope s);
std::string to_string(RewardSpec::Attribution a);
RewardSpec::Scope reward_scope_from_string(const std::string& s);
RewardSpec::Attribution attribution_from_string(const std::string& s);

// costs[k][t] of one episode -> rewards[k][t].
Paths assign_rewards(const Paths& costs, const RewardSpec& spec);

// rewards[i][k][t] over a group of G episodes; each (k,t) cell is centred and
// divided by its population standard deviation plus eps.
std::vector<Paths> group_advantages(const std::vector<Paths>& rewards, double eps = 1e-8);

// G episodes of one training step, all indexed [episode][tier][period].
struct GroupBatch {
  std::size_t group_size = 0;
  std::size_t tiers = 0;
  std::size_t horizon = 0;
  std::vector<Paths> costs;
  std::vector<Paths> rewards;
  std::vector<Paths> advantages;
  std::vector<std::vector<std::vector<Observation>>> observations;
  std::vector<std::vector<std::vector<long>>> actions;
  std::vector<Paths> log_probs;
  std::vector<double> episode_costs;  // system cost per episode

  std::size_t decisions() const noexcept { return group_size * tiers * horizon; }
  std::vector<Observation> all_observations() const;
};

struct GrpoHyper {
  enum class Optimizer { kSgd, kAdam };

  double beta = 0.01;
  double learning_rate = 0.05;
  double clip_norm = 1.0;  // global gradient norm cap; <= 0 disables
  Optimizer optimizer = Optimizer::kSgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool operator==(const GrpoHyper&) const = default;
};

std::string to_string(GrpoHyper::Optimizer o);
GrpoHyper::Optimizer optimizer_from_string(const std::string& s);

// First and second moment estimates carried across Adam steps.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long steps = 0;
};

struct StepDiagnostics {
  bool aborted = false;
  std::string message;
  double grad_norm = 0.0;  // before clipping
  bool clipped = false;
  double kl_before = 0.0;
  double kl_after = 0.0;
  double surrogate = 0.0;  // mean Adv * log pi at the old parameters
  double logp_shift = 0.0;  // mean Adv * (log pi_new - log pi_old)
};

struct StepResult {
  TrainablePtr policy;
  StepDiagnostics diagnostics;
};

// Gradient of (1/N) sum Adv log pi(y|x) - beta (1/N) sum KL(pi(.|x) || ref(.|x)),
// N = G T |A|.
std::vector<double> grpo_gradient(const TrainablePolicy& policy, const TrainablePolicy& reference,
                                  const GroupBatch& batch, double beta);
// The same objective's value.
double grpo_objective(const TrainablePolicy& policy, const TrainablePolicy& reference, const GroupBatch& batch,
                      double beta);

// One ascent step on the clipped gradient (plain, or Adam when selected; the
// Adam state is then required). A non-finite gradient aborts the step and
// returns the unchanged policy.
StepResult grpo_step(const TrainablePtr& policy, const TrainablePolicy& reference, const GroupBatch& batch,
                     const GrpoHyper& hyper, AdamState* adam = nullptr);

struct TrainingSpec {
  // Where training episodes get their demand: the randomized curriculum, or
  // the environment's own demand regime.
  enum class DemandSource { kCurriculum, kScenario };

  std::size_t group_size = 16;
  std::size_t steps = 300;
  GrpoHyper hyper;
  double eps_norm = 1e-8;
  RewardSpec reward;
  DemandCurriculum curriculum;
  DemandSource demand_source = DemandSource::kCurriculum;
  double initial_spread = 6.0;
  long max_order = 64;
  std::size_t eval_runs = 30;
  std::uint64_t eval_seed = 2024;

  void validate() const;
  bool operator==(const TrainingSpec&) const = default;
};

std::string to_string(TrainingSpec::DemandSource s);
TrainingSpec::DemandSource demand_source_from_string(const std::string& s);

// Rolls out G episodes of a shared policy on the physical chain of `env`
// (all tiers use the same policy) and fills rewards and advantages.
GroupBatch collect_group(const TrainablePolicy& policy, const ScenarioConfig& env, const TrainingSpec& spec,
                         std::uint64_t seed, std::size_t step, std::size_t workers = 1);

struct TrainLogRow {
  std::size_t step = 0;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  bool clipped = false;
  double logp_shift = 0.0;
  bool aborted = false;
};

struct TrainResult {
  TrainablePtr policy;
  TrainablePtr reference;
  std::vector<TrainLogRow> log;
};

// Data collection then optimization, `spec.steps` times. The reference for the
// KL term is the initial policy.
TrainResult train(const ScenarioConfig& env, const TrainingSpec& spec, std::uint64_t seed,
                  TrainablePtr initial = nullptr, std::size_t workers = 1);

// Columns: step,mean_cost,std_cost,kl,grad_norm,clipped,logp_shift,aborted
void write_training_log_csv(std::ostream& os, const std::vector<TrainLogRow>& log);

struct EvaluationReport {
  EnsembleRecord record;
  double mean_cost = 0.0;
  double std_cost = 0.0;  // Bessel
  double max_cost = 0.0;
  double cv = 0.0;  // std / mean
  std::vector<double> agent_mean_costs;
  BullwhipMetrics metrics;
};

// Runs `scenario` R times with `policy` at every tier.
EvaluationReport evaluate(const PolicyPtr& policy, const ScenarioConfig& scenario, std::size_t runs,
                          std::uint64_t seed, std::size_t workers = 1);
EvaluationReport evaluate(const std::vector<PolicyPtr>& policies, const ScenarioConfig& scenario, std::size_t runs,
                          std::uint64_t seed, std::size_t workers = 1);

}  // namespace bwlab
