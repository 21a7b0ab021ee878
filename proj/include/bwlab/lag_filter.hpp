#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace bwlab {

// Rational lag-polynomial filter
//
//   A(L) = (n_0 + n_1 L + ... ) / (1 + d_1 L + d_2 L^2 + ...)
//
// acting on a sequence by x_t -> sum_j a_j x_{t-j}. The denominator is kept
// with constant term 1. Poles (reciprocal roots of the denominator, i.e. the
// values p with 1 - p L a factor) are tracked so that the impulse response
// can be truncated with a known geometric tail.
class LagFilter {
 public:
  // Identity filter.
  LagFilter();

  // Poles are computed from the denominator polynomial. Throws
  // ParameterError if the constant term of the denominator is not 1 or the
  // filter is not stable (some pole with modulus >= 1).
  LagFilter(std::vector<double> numerator, std::vector<double> denominator);

  const std::vector<double>& numerator() const noexcept { return num_; }
  const std::vector<double>& denominator() const noexcept { return den_; }
  const std::vector<std::complex<double>>& poles() const noexcept { return poles_; }
  double pole_radius() const noexcept;

  // First `depth` impulse coefficients a_0 .. a_{depth-1}.
  std::vector<double> impulse_response(std::size_t depth) const;

  // Smallest depth N such that the discarded tail sum_{j >= N} a_j^2 is below
  // `tail_tolerance`, using a geometric bound on the pole radius.
  std::size_t depth_for_tail(double tail_tolerance = 1e-12) const;

  // sum_j a_j^2 over the truncated response.
  double energy(double tail_tolerance = 1e-12) const;

  // A(e^{-i omega}).
  std::complex<double> response(double omega) const;

  // Applies the filter to a finite input with zero pre-history.
  std::vector<double> apply(const std::vector<double>& input) const;

  // Product filter (this applied after/before `other`; they commute).
  LagFilter operator*(const LagFilter& other) const;

 private:
  friend LagFilter tier_filter(double theta, double lambda);
  friend LagFilter difference_filter();
  LagFilter(std::vector<double> numerator, std::vector<double> denominator,
            std::vector<std::complex<double>> poles);

  std::vector<double> num_;
  std::vector<double> den_;
  std::vector<std::complex<double>> poles_;
};

// Replenishment filter of one tier under the linear benchmark:
//   H(L) = ((1 + theta*lambda) L - (theta*lambda + 1 - lambda) L^2) / (1 - (1 - lambda) L)
// Throws ParameterError for lambda outside (0,1] or theta < 0.
LagFilter tier_filter(double theta, double lambda);

// Decision-shock filter G(L) = 1 - L.
LagFilter difference_filter();

// Product of the filters, in order. Throws InputError on an empty list.
LagFilter cascade(const std::vector<LagFilter>& filters);

// |A(e^{-i omega})|^2 by direct complex evaluation.
double frequency_gain(const LagFilter& filter, double omega);

// Closed form of |H(e^{-i omega})|^2 for the tier filter.
double tier_gain(double theta, double lambda, double omega);

// Average gain (1/2pi) * integral of the tier gain; closed form
//   1 + 2 theta lambda + 2 theta^2 lambda^2 / (2 - lambda).
double average_gain(double theta, double lambda);

// (1/2pi) * integral over [-pi, pi] of f, composite trapezoid with `nodes`
// intervals (f must be 2pi-periodic).
double periodic_mean(const std::function<double(double)>& f, std::size_t nodes = 1u << 14);

}  // namespace bwlab
