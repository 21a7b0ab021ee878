#include "bwlab/ensemble.hpp"

#include <cmath>
#include <iomanip>
#include <optional>

#include "bwlab/error.hpp"
#include "bwlab/parallel.hpp"

namespace bwlab {

double EnsembleRecord::value(std::size_t run, std::size_t tier, std::size_t period) const {
  return tier == 0 ? demand.at(run).at(period) : orders.at(run).at(tier - 1).at(period);
}

std::vector<double> run_demand(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t run) {
  const bool shared = !cfg.demand.stochastic() || cfg.demand.fixed_path;
  Rng rng(shared ? derive_seed(seed, {kDemandStream}) : derive_seed(seed, {kDemandStream, run}));
  return cfg.demand.generate(cfg.horizon, rng);
}

EnsembleRecord run_ensemble(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t seed, std::size_t workers) {
  cfg.validate();
  return run_ensemble(cfg, build_policies(cfg), runs, seed, workers);
}

EnsembleRecord run_ensemble(const ScenarioConfig& cfg, const std::vector<PolicyPtr>& policies, std::size_t runs,
                            std::uint64_t seed, std::size_t workers) {
  if (runs < 2) throw InsufficientSampleError("an ensemble needs at least 2 runs");
  const std::size_t n = cfg.tiers.size();

  struct Slot {
    std::optional<Trajectory> trajectory;
    std::string failure;
  };
  std::vector<Slot> slots(runs);
  parallel_for(runs, workers, [&](std::size_t r) {
    auto streams = tier_streams(seed, {r}, n);
    try {
      slots[r].trajectory = run_episode(cfg, policies, run_demand(cfg, seed, r), streams);
    } catch (const RemoteBudgetExceeded& e) {
      slots[r].failure = e.what();
    }
  });

  EnsembleRecord rec;
  rec.tiers = n;
  rec.horizon = cfg.horizon;
  rec.master_seed = seed;
  rec.shared_demand = !cfg.demand.stochastic() || cfg.demand.fixed_path;
  for (std::size_t r = 0; r < runs; ++r) {
    if (!slots[r].trajectory) {
      rec.excluded.push_back({r, slots[r].failure});
      continue;
    }
    Trajectory& tr = *slots[r].trajectory;
    rec.run_ids.push_back(r);
    rec.run_seeds.push_back(derive_seed(seed, {r}));
    rec.total_costs.push_back(tr.total_cost());
    rec.orders.push_back(std::move(tr.orders));
    rec.costs.push_back(std::move(tr.costs));
    rec.demand.push_back(std::move(tr.demand));
  }
  if (rec.runs() < 2)
    throw RemoteBudgetExceeded(std::to_string(rec.excluded.size()) + " of " + std::to_string(runs) +
                               " runs failed; fewer than 2 usable runs remain");
  return rec;
}

Paths run_to_run_variance(const EnsembleRecord& e) {
  if (e.runs() < 2) throw InsufficientSampleError("run-to-run variance needs R >= 2");
  Paths out(e.tiers + 1, std::vector<double>(e.horizon));
  std::vector<double> col(e.runs());
  for (std::size_t k = 0; k <= e.tiers; ++k)
    for (std::size_t t = 0; t < e.horizon; ++t) {
      for (std::size_t r = 0; r < e.runs(); ++r) col[r] = e.value(r, k, t);
      out[k][t] = sample_variance(col);
    }
  return out;
}

VarianceEstimate window_run_variance(const std::vector<const std::vector<double>*>& runs, std::size_t begin,
                                     std::size_t end) {
  const std::size_t R = runs.size();
  if (R < 2) throw InsufficientSampleError("variance across runs needs R >= 2");
  if (begin >= end) throw InsufficientSampleError("empty measurement window (burn-in too long?)");
  const std::size_t W = end - begin;
  std::vector<double> s1(W, 0.0), s2(W, 0.0);
  for (const auto* x : runs)
    for (std::size_t t = begin; t < end; ++t) {
      const double v = x->at(t);
      s1[t - begin] += v;
      s2[t - begin] += v * v;
    }
  // Sums of squares are centred per period to limit cancellation.
  const double rd = static_cast<double>(R);
  VarianceEstimate out;
  for (std::size_t w = 0; w < W; ++w) out.value += (s2[w] - s1[w] * s1[w] / rd) / (rd - 1.0);
  out.value /= static_cast<double>(W);
  if (R < 3) {
    out.se = std::nan("");
    return out;
  }
  std::vector<double> reps(R, 0.0);
  for (std::size_t i = 0; i < R; ++i) {
    double acc = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      const double v = runs[i]->at(t);
      const double a = s1[t - begin] - v;
      const double b = s2[t - begin] - v * v;
      acc += (b - a * a / (rd - 1.0)) / (rd - 2.0);
    }
    reps[i] = acc / static_cast<double>(W);
  }
  out.se = jackknife_se(reps);
  return out;
}

VarianceEstimate stationary_variance(const EnsembleRecord& e, std::size_t tier, std::size_t burn_in) {
  if (tier > e.tiers) throw InputError("tier index out of range");
  std::vector<const std::vector<double>*> rows;
  for (std::size_t r = 0; r < e.runs(); ++r) rows.push_back(tier == 0 ? &e.demand[r] : &e.orders[r][tier - 1]);
  return window_run_variance(rows, burn_in, e.horizon);
}

void write_orders_csv(std::ostream& os, const EnsembleRecord& e) {
  os << "run,tier,period,order,cost\n" << std::setprecision(12);
  for (std::size_t r = 0; r < e.runs(); ++r)
    for (std::size_t k = 0; k < e.tiers; ++k)
      for (std::size_t t = 0; t < e.horizon; ++t)
        os << e.run_ids[r] << ',' << k + 1 << ',' << t + 1 << ',' << e.orders[r][k][t] << ',' << e.costs[r][k][t]
           << '\n';
}

void write_demand_csv(std::ostream& os, const EnsembleRecord& e) {
  os << "run,period,demand\n" << std::setprecision(12);
  for (std::size_t r = 0; r < e.runs(); ++r)
    for (std::size_t t = 0; t < e.horizon; ++t) os << e.run_ids[r] << ',' << t + 1 << ',' << e.demand[r][t] << '\n';
}

void write_variance_csv(std::ostream& os, const Paths& sigma2, std::size_t from) {
  os << "tier,period,sigma2\n" << std::setprecision(12);
  for (std::size_t k = 0; k < sigma2.size(); ++k)
    for (std::size_t t = from; t < sigma2[k].size(); ++t) os << k << ',' << t + 1 << ',' << sigma2[k][t] << '\n';
}

}  // namespace bwlab
