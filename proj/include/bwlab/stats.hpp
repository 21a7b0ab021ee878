#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bwlab {

double mean(std::span<const double> x);
// Bessel-corrected; throws InsufficientSampleError for fewer than 2 values.
double sample_variance(std::span<const double> x);
double population_stddev(std::span<const double> x);

// Linear-interpolation quantile (type 7) of an already sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

// Standard error from leave-one-out replicates: sqrt((n-1)/n * sum (r_i - rbar)^2).
double jackknife_se(std::span<const double> replicates);

// Sample variance with its jackknife standard error.
struct VarianceEstimate {
  double value = 0.0;
  double se = 0.0;
};
VarianceEstimate variance_with_se(std::span<const double> x);

// Five-number summary with Tukey whiskers (1.5 IQR) and the points outside them.
struct BoxSummary {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;
  std::vector<double> outliers;
};
BoxSummary box_summary(std::vector<double> values);

}  // namespace bwlab
