#include "bwlab/demand.hpp"

#include <algorithm>
#include <cmath>

#include "bwlab/error.hpp"

namespace bwlab {

double truncated_normal(Rng& rng, double mean, double stddev, double low, double high) {
  if (!(low < high) || !(stddev > 0.0)) throw ParameterError("truncated normal needs sd > 0 and low < high");
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const double x = rng.normal(mean, stddev);
    if (x >= low && x <= high) return x;
  }
  throw ParameterError("truncated normal support has negligible mass");
}

void DemandCurriculum::validate() const {
  if (!poisson && !trunc_normal) throw ParameterError("curriculum needs at least one regime");
  if (!(0.0 < rate_low && rate_low <= rate_high)) throw ParameterError("curriculum rate range invalid");
  if (!(mu_low <= mu_high)) throw ParameterError("curriculum mean range invalid");
  if (!(0.0 < sigma_low && sigma_low <= sigma_high)) throw ParameterError("curriculum sd range invalid");
  if (!(support_low < support_high)) throw ParameterError("curriculum support invalid");
}

std::vector<double> DemandCurriculum::sample(std::size_t horizon, Rng& rng) const {
  bool use_poisson = poisson;
  if (poisson && trunc_normal) use_poisson = rng.uniform() < 0.5;
  std::vector<double> d(horizon);
  if (use_poisson) {
    const double rate = rng.uniform(rate_low, rate_high);
    for (auto& v : d) v = static_cast<double>(rng.poisson(rate));
  } else {
    const double mu = rng.uniform(mu_low, mu_high);
    const double sd = rng.uniform(sigma_low, sigma_high);
    for (auto& v : d) v = truncated_normal(rng, mu, sd, support_low, support_high);
  }
  return d;
}

DemandSpec DemandSpec::classic_pattern() { return DemandSpec{}; }

DemandSpec DemandSpec::constant(double v) {
  DemandSpec s;
  s.kind = Kind::kConstant;
  s.value = v;
  return s;
}

DemandSpec DemandSpec::normal(double mean, double stddev) {
  DemandSpec s;
  s.kind = Kind::kNormal;
  s.mean = mean;
  s.stddev = stddev;
  return s;
}

bool DemandSpec::stochastic() const noexcept {
  return kind == Kind::kNormal || kind == Kind::kPoisson || kind == Kind::kTruncNormal || kind == Kind::kCurriculum;
}

void DemandSpec::validate() const {
  switch (kind) {
    case Kind::kConstant:
      if (!(value >= 0.0)) throw ParameterError("constant demand must be >= 0");
      break;
    case Kind::kPattern:
      if (!(value >= 0.0 && step_value >= 0.0)) throw ParameterError("pattern demand must be >= 0");
      if (step_week < 1) throw ParameterError("pattern step_week must be >= 1");
      break;
    case Kind::kPath:
      if (path.empty()) throw ParameterError("demand path is empty");
      break;
    case Kind::kNormal:
      if (!(stddev >= 0.0)) throw ParameterError("demand sd must be >= 0");
      break;
    case Kind::kPoisson:
      if (!(rate > 0.0)) throw ParameterError("poisson rate must be > 0");
      break;
    case Kind::kTruncNormal:
      if (!(stddev > 0.0) || !(low < high)) throw ParameterError("trunc_normal needs sd > 0 and low < high");
      break;
    case Kind::kCurriculum:
      curriculum.validate();
      break;
  }
}

std::vector<double> DemandSpec::generate(std::size_t horizon, Rng& rng) const {
  std::vector<double> d(horizon);
  switch (kind) {
    case Kind::kConstant:
      std::fill(d.begin(), d.end(), value);
      break;
    case Kind::kPattern:
      for (std::size_t t = 0; t < horizon; ++t) d[t] = static_cast<long>(t) + 1 < step_week ? value : step_value;
      break;
    case Kind::kPath:
      for (std::size_t t = 0; t < horizon; ++t) d[t] = path[std::min(t, path.size() - 1)];
      break;
    case Kind::kNormal:
      for (auto& v : d) v = rng.normal(mean, stddev);
      break;
    case Kind::kPoisson:
      for (auto& v : d) v = static_cast<double>(rng.poisson(rate));
      break;
    case Kind::kTruncNormal:
      for (auto& v : d) v = truncated_normal(rng, mean, stddev, low, high);
      break;
    case Kind::kCurriculum:
      return curriculum.sample(horizon, rng);
  }
  return d;
}

std::string to_string(DemandSpec::Kind kind) {
  switch (kind) {
    case DemandSpec::Kind::kConstant: return "constant";
    case DemandSpec::Kind::kPattern: return "pattern";
    case DemandSpec::Kind::kPath: return "path";
    case DemandSpec::Kind::kNormal: return "normal";
    case DemandSpec::Kind::kPoisson: return "poisson";
    case DemandSpec::Kind::kTruncNormal: return "trunc_normal";
    case DemandSpec::Kind::kCurriculum: return "curriculum";
  }
  return "?";
}

DemandSpec::Kind demand_kind_from_string(const std::string& name) {
  for (auto k : {DemandSpec::Kind::kConstant, DemandSpec::Kind::kPattern, DemandSpec::Kind::kPath,
                 DemandSpec::Kind::kNormal, DemandSpec::Kind::kPoisson, DemandSpec::Kind::kTruncNormal,
                 DemandSpec::Kind::kCurriculum})
    if (to_string(k) == name) return k;
  throw ParameterError("unknown demand kind '" + name + "'");
}

}  // namespace bwlab
