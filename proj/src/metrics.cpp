#include "bwlab/metrics.hpp"

#include <algorithm>
#include <iomanip>

#include "bwlab/error.hpp"

namespace bwlab {

Cell safe_ratio(double num, double den, double tau) {
  if (!(den >= tau)) return std::nullopt;
  return num / den;
}

BullwhipMetrics bullwhip_metrics(const Paths& sigma2, double tau) {
  if (!(tau > 0.0)) throw ParameterError("denominator floor tau must be > 0");
  if (sigma2.size() < 2) throw InputError("variance table needs demand plus at least one tier");
  BullwhipMetrics m;
  m.tau = tau;
  m.sigma2 = sigma2;
  const std::size_t n = sigma2.size() - 1;
  const std::size_t T = sigma2.front().size();
  m.psi.assign(n, std::vector<Cell>(T));
  m.cumulative.assign(n, std::vector<Cell>(T));
  for (std::size_t k = 1; k <= n; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      m.psi[k - 1][t] = safe_ratio(sigma2[k][t], sigma2[k - 1][t], tau);
      const Cell prev = k == 1 ? Cell(1.0) : m.cumulative[k - 2][t];
      if (prev && m.psi[k - 1][t]) m.cumulative[k - 1][t] = *prev * *m.psi[k - 1][t];
    }
  m.phi.assign(n + 1, std::vector<Cell>(T > 0 ? T - 1 : 0));
  for (std::size_t k = 0; k <= n; ++k)
    for (std::size_t t = 0; t + 1 < T; ++t) m.phi[k][t] = safe_ratio(sigma2[k][t + 1], sigma2[k][t], tau);
  return m;
}

CellTable classical_bullwhip(const EnsembleRecord& e, double tau, std::size_t from) {
  CellTable out(e.runs(), std::vector<Cell>(e.tiers));
  if (e.horizon < from + 2) return out;
  for (std::size_t r = 0; r < e.runs(); ++r) {
    auto var_of = [&](std::size_t k) {
      const std::vector<double>& x = k == 0 ? e.demand[r] : e.orders[r][k - 1];
      return sample_variance(std::span<const double>(x).subspan(from));
    };
    double below = var_of(0);
    for (std::size_t k = 1; k <= e.tiers; ++k) {
      const double here = var_of(k);
      out[r][k - 1] = safe_ratio(here, below, tau);
      below = here;
    }
  }
  return out;
}

BullwhipMetrics bullwhip_metrics(const EnsembleRecord& e, double tau, std::size_t from) {
  BullwhipMetrics m = bullwhip_metrics(run_to_run_variance(e), tau);
  m.classical = classical_bullwhip(e, tau, from);
  return m;
}

std::vector<double> median_over_time(const Paths& sigma2, std::size_t from) {
  std::vector<double> out;
  for (const auto& row : sigma2) {
    if (row.size() <= from) throw InsufficientSampleError("no periods left after the burn-in");
    std::vector<double> v(row.begin() + static_cast<std::ptrdiff_t>(from), row.end());
    std::sort(v.begin(), v.end());
    out.push_back(quantile_sorted(v, 0.5));
  }
  return out;
}

namespace {

void put(std::ostream& os, const Cell& c) {
  if (c) os << *c;
}

}  // namespace

void write_metrics_csv(std::ostream& os, const BullwhipMetrics& m) {
  os << "tier,period,sigma2,psi,cumulative,phi\n" << std::setprecision(12);
  for (std::size_t k = 0; k < m.sigma2.size(); ++k)
    for (std::size_t t = 0; t < m.sigma2[k].size(); ++t) {
      os << k << ',' << t + 1 << ',' << m.sigma2[k][t] << ',';
      if (k > 0) put(os, m.psi[k - 1][t]);
      os << ',';
      if (k > 0) put(os, m.cumulative[k - 1][t]);
      os << ',';
      if (t < m.phi[k].size()) put(os, m.phi[k][t]);
      os << '\n';
    }
}

void write_classical_csv(std::ostream& os, const BullwhipMetrics& m, const std::vector<std::size_t>& run_ids) {
  os << "run,tier,ratio\n" << std::setprecision(12);
  for (std::size_t r = 0; r < m.classical.size(); ++r)
    for (std::size_t k = 0; k < m.classical[r].size(); ++k) {
      os << (r < run_ids.size() ? run_ids[r] : r) << ',' << k + 1 << ',';
      put(os, m.classical[r][k]);
      os << '\n';
    }
}

void write_boxplot_csv(std::ostream& os, const EnsembleRecord& e) {
  os << "tier,period,min,q1,median,q3,max,whisker_low,whisker_high,outliers\n" << std::setprecision(12);
  std::vector<double> col(e.runs());
  for (std::size_t k = 0; k <= e.tiers; ++k)
    for (std::size_t t = 0; t < e.horizon; ++t) {
      for (std::size_t r = 0; r < e.runs(); ++r) col[r] = e.value(r, k, t);
      const BoxSummary b = box_summary(col);
      os << k << ',' << t + 1 << ',' << b.min << ',' << b.q1 << ',' << b.median << ',' << b.q3 << ',' << b.max << ','
         << b.whisker_low << ',' << b.whisker_high << ',';
      for (std::size_t i = 0; i < b.outliers.size(); ++i) os << (i ? ";" : "") << b.outliers[i];
      os << '\n';
    }
}

}  // namespace bwlab
