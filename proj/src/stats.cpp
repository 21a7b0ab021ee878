#include "bwlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bwlab/error.hpp"

namespace bwlab {

double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientSampleError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientSampleError("sample variance needs at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double population_stddev(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InsufficientSampleError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double jackknife_se(std::span<const double> replicates) {
  const std::size_t n = replicates.size();
  if (n < 2) return std::nan("");
  const double m = mean(replicates);
  double ss = 0.0;
  for (double r : replicates) ss += (r - m) * (r - m);
  return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

VarianceEstimate variance_with_se(std::span<const double> x) {
  VarianceEstimate out;
  out.value = sample_variance(x);
  const std::size_t n = x.size();
  if (n < 3) {
    out.se = std::nan("");
    return out;
  }
  double s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    s1 += v;
    s2 += v * v;
  }
  std::vector<double> reps(n);
  const double m = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = s1 - x[i];
    const double b = s2 - x[i] * x[i];
    reps[i] = (b - a * a / m) / (m - 1.0);
  }
  out.se = jackknife_se(reps);
  return out;
}

BoxSummary box_summary(std::vector<double> values) {
  if (values.empty()) throw InsufficientSampleError("box summary of an empty sample");
  std::sort(values.begin(), values.end());
  BoxSummary b;
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.max;
  b.whisker_high = b.min;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  }
  return b;
}

}  // namespace bwlab
