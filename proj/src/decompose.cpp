#include "bwlab/decompose.hpp"

#include <cmath>
#include <iomanip>

#include "bwlab/ensemble.hpp"
#include "bwlab/error.hpp"
#include "bwlab/parallel.hpp"

namespace bwlab {

namespace {

struct Components {
  double total, demand, decision;
};

// From sums over M paths of the path means (a), squared means (b) and
// within-path variances (c).
Components components(double a, double b, double c, double M, double R) {
  const double decision = c / M;
  const double between = (b - a * a / M) / (M - 1.0);
  const double demand = between - decision / R;
  const double total = (R * (M - 1.0) * between + M * (R - 1.0) * decision) / (M * R - 1.0);
  return {total, demand, decision};
}

void finish_tier(TierDecomposition& td) {
  td.gap = td.total.value - (td.demand.available ? td.demand.value : 0.0) - td.decision.value;
  double s = td.total.se * td.total.se + td.decision.se * td.decision.se;
  if (td.demand.available) s += td.demand.se * td.demand.se;
  td.combined_se = std::sqrt(s);
  td.nonstationary = std::isfinite(td.trend_se) && std::abs(td.trend) > 3.0 * td.trend_se && td.trend_se > 0.0;
}

DecompositionResult single_path(const NestedOrders& orders, std::size_t burn_in, DecompositionResult d) {
  const auto& runs = orders.front();
  const std::size_t R = runs.size();
  d.demand_available = false;
  d.total.assign(d.tiers, std::vector<double>(d.horizon));
  d.decision = d.total;
  d.demand.assign(d.tiers, std::vector<double>(d.horizon, std::nan("")));
  std::vector<double> col(R);
  for (std::size_t k = 0; k < d.tiers; ++k) {
    for (std::size_t t = 0; t < d.horizon; ++t) {
      for (std::size_t r = 0; r < R; ++r) col[r] = runs[r][k][t];
      d.decision[k][t] = d.total[k][t] = sample_variance(col);
    }
    std::vector<const std::vector<double>*> rows;
    for (const auto& run : runs) rows.push_back(&run[k]);
    const std::size_t mid = burn_in + (d.horizon - burn_in) / 2;
    const auto all = window_run_variance(rows, burn_in, d.horizon);
    TierDecomposition td;
    td.tier = k + 1;
    td.decision = {all.value, all.se, true};
    td.total = td.decision;
    td.demand = {std::nan(""), std::nan(""), false};
    if (mid > burn_in && mid < d.horizon) {
      const auto first = window_run_variance(rows, burn_in, mid);
      const auto second = window_run_variance(rows, mid, d.horizon);
      td.trend = first.value - second.value;
      td.trend_se = std::hypot(first.se, second.se);
    }
    finish_tier(td);
    td.combined_se = std::hypot(td.total.se, td.decision.se);
    d.window.push_back(td);
  }
  return d;
}

}  // namespace

DecompositionResult decompose_samples(const NestedOrders& orders, std::size_t burn_in) {
  const std::size_t M = orders.size();
  if (M < 1) throw InsufficientSampleError("decomposition needs at least one demand path");
  const std::size_t R = orders.front().size();
  if (R < 2) throw InsufficientSampleError("decomposition needs R >= 2 runs per path");
  for (const auto& p : orders)
    if (p.size() != R) throw InputError("every demand path needs the same number of runs");
  const std::size_t n = orders.front().front().size();
  const std::size_t T = n ? orders.front().front().front().size() : 0;
  if (burn_in >= T) throw InsufficientSampleError("burn-in leaves no periods to measure");

  DecompositionResult d;
  d.paths = M;
  d.runs = R;
  d.tiers = n;
  d.horizon = T;
  d.burn_in = burn_in;
  if (M == 1) return single_path(orders, burn_in, d);

  const double Md = static_cast<double>(M), Rd = static_cast<double>(R);
  d.total.assign(n, std::vector<double>(T));
  d.demand = d.decision = d.total;
  const std::size_t W = T - burn_in;
  const std::size_t mid = burn_in + W / 2;

  std::vector<double> path_mean(M), path_var(M), col(R);
  for (std::size_t k = 0; k < n; ++k) {
    // Per-path sufficient statistics kept for the window so that every
    // delete-one-path replicate is O(1) per period.
    std::vector<std::vector<double>> xbar(M, std::vector<double>(T)), s2(M, std::vector<double>(T));
    std::vector<double> A(T, 0.0), B(T, 0.0), C(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t r = 0; r < R; ++r) col[r] = orders[m][r][k][t];
        xbar[m][t] = mean(col);
        s2[m][t] = sample_variance(col);
        A[t] += xbar[m][t];
        B[t] += xbar[m][t] * xbar[m][t];
        C[t] += s2[m][t];
      }
      const auto c = components(A[t], B[t], C[t], Md, Rd);
      d.total[k][t] = c.total;
      d.demand[k][t] = c.demand;
      d.decision[k][t] = c.decision;
    }

    auto window_mean = [&](const std::vector<double>& v, std::size_t b, std::size_t e) {
      double s = 0.0;
      for (std::size_t t = b; t < e; ++t) s += v[t];
      return s / static_cast<double>(e - b);
    };
    TierDecomposition td;
    td.tier = k + 1;
    td.total.value = window_mean(d.total[k], burn_in, T);
    td.demand.value = window_mean(d.demand[k], burn_in, T);
    td.decision.value = window_mean(d.decision[k], burn_in, T);
    const bool halves = mid > burn_in && mid < T;
    if (halves) td.trend = window_mean(d.total[k], burn_in, mid) - window_mean(d.total[k], mid, T);

    if (M >= 3) {
      std::vector<double> rt(M), rd(M), re(M), rtrend(M);
      for (std::size_t m = 0; m < M; ++m) {
        double st = 0.0, sd = 0.0, se = 0.0, first = 0.0, second = 0.0;
        for (std::size_t t = burn_in; t < T; ++t) {
          const double x = xbar[m][t];
          const auto c = components(A[t] - x, B[t] - x * x, C[t] - s2[m][t], Md - 1.0, Rd);
          st += c.total;
          sd += c.demand;
          se += c.decision;
          (t < mid ? first : second) += c.total;
        }
        rt[m] = st / static_cast<double>(W);
        rd[m] = sd / static_cast<double>(W);
        re[m] = se / static_cast<double>(W);
        if (halves)
          rtrend[m] = first / static_cast<double>(mid - burn_in) - second / static_cast<double>(T - mid);
      }
      td.total.se = jackknife_se(rt);
      td.demand.se = jackknife_se(rd);
      td.decision.se = jackknife_se(re);
      td.trend_se = halves ? jackknife_se(rtrend) : std::nan("");
    } else {
      td.total.se = td.demand.se = td.decision.se = td.trend_se = std::nan("");
    }
    finish_tier(td);
    d.window.push_back(td);
  }
  return d;
}

DecompositionResult decompose_variance(const ScenarioConfig& cfg, std::size_t paths, std::size_t runs,
                                       std::uint64_t seed, std::optional<std::size_t> burn_in, std::size_t workers) {
  cfg.validate();
  if (paths < 1) throw InsufficientSampleError("decomposition needs M >= 1 demand paths");
  if (runs < 2) throw InsufficientSampleError("decomposition needs R >= 2 runs per path");
  const auto policies = build_policies(cfg);
  const std::size_t n = cfg.tiers.size();
  std::vector<std::vector<double>> demand(paths);
  for (std::size_t m = 0; m < paths; ++m) {
    Rng rng(derive_seed(seed, {kDemandStream, m}));
    demand[m] = cfg.demand.generate(cfg.horizon, rng);
  }
  NestedOrders orders(paths, std::vector<Paths>(runs));
  parallel_for(paths * runs, workers, [&](std::size_t i) {
    const std::size_t m = i / runs, r = i % runs;
    auto streams = tier_streams(seed, {m, r}, n);
    orders[m][r] = run_episode(cfg, policies, demand[m], streams).orders;
  });
  return decompose_samples(orders, burn_in.value_or(cfg.effective_burn_in()));
}

std::vector<BoundCheck> check_bounds(const DecompositionResult& d, const GainProfile& gains, double demand_variance,
                                     const std::vector<double>& shock_variances) {
  std::vector<BoundCheck> out;
  for (const auto& w : d.window) {
    if (w.tier > gains.size()) break;
    BoundCheck c;
    c.tier = w.tier;
    c.demand = w.demand;
    c.decision = w.decision;
    c.nonstationary = w.nonstationary;
    c.demand_bound = demand_bound(w.tier, demand_variance, gains);
    c.decision_bound = decision_bound(w.tier, shock_variances, gains);
    auto passes = [](const ComponentEstimate& e, double bound) {
      const double se = std::isfinite(e.se) ? e.se : 0.0;
      return e.value >= bound - 3.0 * se;
    };
    c.demand_pass = !w.demand.available || passes(w.demand, c.demand_bound);
    c.decision_pass = passes(w.decision, c.decision_bound);
    out.push_back(c);
  }
  return out;
}

bool all_pass(const std::vector<BoundCheck>& checks) {
  for (const auto& c : checks)
    if (!c.demand_pass || !c.decision_pass) return false;
  return true;
}

void write_decomposition_csv(std::ostream& os, const DecompositionResult& d) {
  os << "tier,period,total,demand,decision\n" << std::setprecision(12);
  for (std::size_t k = 0; k < d.tiers; ++k)
    for (std::size_t t = 0; t < d.horizon; ++t) {
      os << k + 1 << ',' << t + 1 << ',' << d.total[k][t] << ',';
      if (d.demand_available) os << d.demand[k][t];
      os << ',' << d.decision[k][t] << '\n';
    }
}

void write_decomposition_summary_csv(std::ostream& os, const DecompositionResult& d) {
  os << "tier,total,total_se,demand,demand_se,decision,decision_se,gap,combined_se,nonstationary\n"
     << std::setprecision(12);
  for (const auto& w : d.window) {
    os << w.tier << ',' << w.total.value << ',' << w.total.se << ',';
    if (w.demand.available)
      os << w.demand.value << ',' << w.demand.se;
    else
      os << "unavailable,";
    os << ',' << w.decision.value << ',' << w.decision.se << ',' << w.gap << ',' << w.combined_se << ','
       << (w.nonstationary ? 1 : 0) << '\n';
  }
}

void write_bound_checks_csv(std::ostream& os, const std::vector<BoundCheck>& checks) {
  os << "tier,demand,demand_se,demand_bound,demand_pass,decision,decision_se,decision_bound,decision_pass,"
        "nonstationary\n"
     << std::setprecision(12);
  for (const auto& c : checks) {
    os << c.tier << ',';
    if (c.demand.available)
      os << c.demand.value << ',' << c.demand.se;
    else
      os << "unavailable,";
    os << ',' << c.demand_bound << ',' << (c.demand_pass ? 1 : 0) << ',' << c.decision.value << ','
       << c.decision.se << ',' << c.decision_bound << ',' << (c.decision_pass ? 1 : 0) << ','
       << (c.nonstationary ? 1 : 0) << '\n';
  }
}

}  // namespace bwlab
