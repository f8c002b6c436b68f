#pragma once

namespace plume::normal {

/// Standard normal CDF.
double cdf(double x);

/// log Q(x) = log(1 - cdf(x)), accurate far into the upper tail.
double log_upper_tail(double x);

/// log cdf(x), accurate far into the lower tail.
double log_cdf(double x);

/// log(cdf(b) - cdf(a)) for a < b on the standard scale. Returns -inf when
/// a >= b. Accurate when both limits sit deep in the same tail and when the
/// interval is narrow.
double log_cdf_diff(double a, double b);

/// log N(x; mean, variance).
double log_pdf(double x, double mean, double variance);

/// log(exp(a) + exp(b)) without overflow; handles -inf operands.
double log_add(double a, double b);

}  // namespace plume::normal
