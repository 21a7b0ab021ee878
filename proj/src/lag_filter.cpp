#include "bwlab/lag_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "bwlab/error.hpp"

namespace bwlab {

namespace {

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

void trim_trailing_zeros(std::vector<double>& p) {
  while (p.size() > 1 && p.back() == 0.0) p.pop_back();
}

// Poles p_i with den(L) = prod_i (1 - p_i L): the roots of the monic
// polynomial z^d + d_1 z^{d-1} + ... + d_d.
std::vector<std::complex<double>> poles_of(const std::vector<double>& den) {
  const std::size_t d = den.size() - 1;
  if (d == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) companion(0, static_cast<Eigen::Index>(j)) = -den[j + 1];
  for (std::size_t i = 1; i < d; ++i)
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> poles;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) poles.push_back(solver.eigenvalues()[i]);
  return poles;
}

}  // namespace

LagFilter::LagFilter() : num_{1.0}, den_{1.0} {}

LagFilter::LagFilter(std::vector<double> numerator, std::vector<double> denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
  if (num_.empty()) num_ = {0.0};
  if (den_.empty() || den_.front() != 1.0) throw ParameterError("denominator must have constant term 1");
  trim_trailing_zeros(num_);
  trim_trailing_zeros(den_);
  poles_ = poles_of(den_);
  if (pole_radius() >= 1.0) throw ParameterError("filter is not stable (pole on or outside the unit circle)");
}

LagFilter::LagFilter(std::vector<double> numerator, std::vector<double> denominator,
                     std::vector<std::complex<double>> poles)
    : num_(std::move(numerator)), den_(std::move(denominator)), poles_(std::move(poles)) {
  trim_trailing_zeros(num_);
  trim_trailing_zeros(den_);
}

double LagFilter::pole_radius() const noexcept {
  double r = 0.0;
  for (const auto& p : poles_) r = std::max(r, std::abs(p));
  return r;
}

std::vector<double> LagFilter::impulse_response(std::size_t depth) const {
  std::vector<double> a(depth, 0.0);
  for (std::size_t j = 0; j < depth; ++j) {
    double v = j < num_.size() ? num_[j] : 0.0;
    for (std::size_t i = 1; i < den_.size() && i <= j; ++i) v -= den_[i] * a[j - i];
    a[j] = v;
  }
  return a;
}

std::size_t LagFilter::depth_for_tail(double tail_tolerance) const {
  const std::size_t finite_part = num_.size() + den_.size();
  const double rho = pole_radius();
  if (den_.size() == 1 || rho < 1e-300) return finite_part;  // FIR: exact

  // Beyond the numerator, a_j is a combination of p^j times polynomials of
  // degree < multiplicity (at most the denominator degree m). Once
  // r_j = rho (1 + 1/j)^(m-1) < 1 the coefficients decay at least
  // geometrically with ratio r_j, so the tail is bounded by
  // (window max of a^2) * (m + 1) * r_j^2 / (1 - r_j^2).
  const std::size_t m = den_.size() - 1;
  const std::size_t window = m + 1;
  std::vector<double> a;
  a.reserve(1024);
  for (std::size_t j = 0;; ++j) {
    double v = j < num_.size() ? num_[j] : 0.0;
    for (std::size_t i = 1; i < den_.size() && i <= j; ++i) v -= den_[i] * a[j - i];
    a.push_back(v);
    if (j + 1 < finite_part || j + 1 < window) continue;
    const double rj = rho * std::pow(1.0 + 1.0 / static_cast<double>(j + 1), static_cast<double>(m - 1));
    if (rj >= 1.0) continue;
    double peak = 0.0;
    for (std::size_t w = 0; w < window; ++w) peak = std::max(peak, a[j - w] * a[j - w]);
    const double tail = peak * static_cast<double>(window) * rj * rj / (1.0 - rj * rj);
    if (tail < tail_tolerance) return j + 1;
    if (j > 10'000'000) throw ConsistencyError("impulse response did not decay");
  }
}

double LagFilter::energy(double tail_tolerance) const {
  const auto a = impulse_response(depth_for_tail(tail_tolerance));
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

std::complex<double> LagFilter::response(double omega) const {
  const std::complex<double> z = std::polar(1.0, -omega);
  auto eval = [&](const std::vector<double>& p) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) acc = acc * z + p[i];
    return acc;
  };
  return eval(num_) / eval(den_);
}

std::vector<double> LagFilter::apply(const std::vector<double>& input) const {
  std::vector<double> y(input.size(), 0.0);
  for (std::size_t t = 0; t < input.size(); ++t) {
    double v = 0.0;
    for (std::size_t i = 0; i < num_.size() && i <= t; ++i) v += num_[i] * input[t - i];
    for (std::size_t i = 1; i < den_.size() && i <= t; ++i) v -= den_[i] * y[t - i];
    y[t] = v;
  }
  return y;
}

LagFilter LagFilter::operator*(const LagFilter& other) const {
  std::vector<std::complex<double>> poles = poles_;
  poles.insert(poles.end(), other.poles_.begin(), other.poles_.end());
  return LagFilter(convolve(num_, other.num_), convolve(den_, other.den_), std::move(poles));
}

LagFilter tier_filter(double theta, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ParameterError("smoothing lambda must lie in (0,1]");
  if (!(theta >= 0.0)) throw ParameterError("target multiplier theta must be >= 0");
  const double tl = theta * lambda;
  const double a = 1.0 - lambda;
  std::vector<std::complex<double>> poles;
  if (a != 0.0) poles.emplace_back(a, 0.0);
  return LagFilter({0.0, 1.0 + tl, -(tl + a)}, {1.0, -a}, std::move(poles));
}

LagFilter difference_filter() { return LagFilter({1.0, -1.0}, {1.0}, {}); }

LagFilter cascade(const std::vector<LagFilter>& filters) {
  if (filters.empty()) throw InputError("cascade of an empty filter list");
  LagFilter out = filters.front();
  for (std::size_t i = 1; i < filters.size(); ++i) out = out * filters[i];
  return out;
}

double frequency_gain(const LagFilter& filter, double omega) { return std::norm(filter.response(omega)); }

double tier_gain(double theta, double lambda, double omega) {
  const double u = 1.0 - std::cos(omega);
  return 1.0 + 2.0 * theta * lambda * (2.0 - lambda + theta * lambda) * u /
                   (lambda * lambda + 2.0 * (1.0 - lambda) * u);
}

double average_gain(double theta, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ParameterError("smoothing lambda must lie in (0,1]");
  if (!(theta >= 0.0)) throw ParameterError("target multiplier theta must be >= 0");
  const double tl = theta * lambda;
  return 1.0 + 2.0 * tl + 2.0 * tl * tl / (2.0 - lambda);
}

double periodic_mean(const std::function<double(double)>& f, std::size_t nodes) {
  const double h = 2.0 * std::numbers::pi / static_cast<double>(nodes);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) s += f(-std::numbers::pi + h * static_cast<double>(i));
  return s / static_cast<double>(nodes);
}

}  // namespace bwlab
