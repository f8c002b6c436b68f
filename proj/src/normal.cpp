#include "plume/normal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace plume::normal {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kHalfLog2Pi = 0.91893853320467274178;
// Above this, erfc(x / sqrt 2) drifts toward subnormal range.
constexpr double kTailSwitch = 30.0;

// Laplace continued fraction for Q(x) / phi(x), evaluated bottom-up. Converges
// quickly for x well above 1.
double mills_ratio(double x) {
  double t = x;
  for (int k = 60; k >= 1; --k) t = x + k / t;
  return 1.0 / t;
}

}  // namespace

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_upper_tail(double x) {
  if (std::isnan(x)) return x;
  if (x == std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (x < kTailSwitch) return std::log(0.5 * std::erfc(x * kInvSqrt2));
  return -0.5 * x * x - kHalfLog2Pi + std::log(mills_ratio(x));
}

double log_cdf(double x) { return log_upper_tail(-x); }

double log_cdf_diff(double a, double b) {
  if (!(a < b)) return -std::numeric_limits<double>::infinity();
  if (a >= 0.0) {
    const double la = log_upper_tail(a);
    const double lb = log_upper_tail(b);
    return la + std::log(-std::expm1(lb - la));
  }
  if (b <= 0.0) {
    const double la = log_upper_tail(-b);
    const double lb = log_upper_tail(-a);
    return la + std::log(-std::expm1(lb - la));
  }
  // Straddles zero: both erf terms are positive, so no cancellation.
  return std::log(0.5 * (std::erf(b * kInvSqrt2) + std::erf(-a * kInvSqrt2)));
}

double log_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * d * d / variance - 0.5 * std::log(variance) - kHalfLog2Pi;
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace plume::normal
