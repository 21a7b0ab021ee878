#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bwlab/rng.hpp"

namespace bwlab {

// Randomized demand regimes used for training: each episode draws a regime
// and its hyper-parameters, then i.i.d. weekly demand.
struct DemandCurriculum {
  bool poisson = true;
  bool trunc_normal = true;
  double rate_low = 5.0, rate_high = 20.0;     // Poisson rate ~ U(low, high)
  double mu_low = 8.0, mu_high = 20.0;         // truncated-normal mean ~ U
  double sigma_low = 2.0, sigma_high = 6.0;    // truncated-normal sd ~ U
  double support_low = 0.0, support_high = 50.0;
  bool resample_per_episode = true;  // false: one draw shared by a whole group

  void validate() const;
  std::vector<double> sample(std::size_t horizon, Rng& rng) const;
  bool operator==(const DemandCurriculum&) const = default;
};

struct DemandSpec {
  enum class Kind { kConstant, kPattern, kPath, kNormal, kPoisson, kTruncNormal, kCurriculum };

  Kind kind = Kind::kPattern;
  double value = 4.0;      // constant level; pattern level before the step
  double step_value = 8.0;  // pattern level from step_week on
  long step_week = 5;       // 1-based week of the step
  std::vector<double> path;  // explicit path (repeats its last value if short)
  double mean = 0.0;         // normal / trunc_normal
  double stddev = 1.0;
  double rate = 4.0;  // poisson
  double low = 0.0, high = 50.0;  // trunc_normal support
  DemandCurriculum curriculum;
  // Stochastic regimes only: every run shares one path drawn from the
  // master seed instead of drawing its own.
  bool fixed_path = false;

  // The classic step pattern (4,4,4,4,8,8,...).
  static DemandSpec classic_pattern();
  static DemandSpec constant(double v);
  static DemandSpec normal(double mean, double stddev);

  bool stochastic() const noexcept;
  void validate() const;
  std::vector<double> generate(std::size_t horizon, Rng& rng) const;
  bool operator==(const DemandSpec&) const = default;
};

std::string to_string(DemandSpec::Kind kind);
DemandSpec::Kind demand_kind_from_string(const std::string& name);

// Rejection sampler for N(mean, sd^2) restricted to [low, high].
double truncated_normal(Rng& rng, double mean, double stddev, double low, double high);

}  // namespace bwlab
