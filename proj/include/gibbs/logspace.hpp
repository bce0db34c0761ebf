#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "gibbs/errors.hpp"

namespace gibbs {

// Log of a nonnegative magnitude; -inf is the distinguished zero state.
using LogValue = double;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// lgamma_r avoids the signgam global; every argument we pass is positive.
inline double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

// log (x)_n with (x)_n = x(x+1)...(x+n-1). A direct product of logs keeps full
// relative accuracy for short runs; past 32 terms the two-lgamma form wins.
inline LogValue log_rising_factorial(double x, long long n) {
  if (!(x > 0.0)) {
    throw NumericRangeError("log_rising_factorial: base must be positive, got " +
                            std::to_string(x));
  }
  if (n < 0) throw NumericRangeError("log_rising_factorial: negative length");
  if (n == 0) return 0.0;
  if (n <= 32) {
    double acc = 0.0;
    for (long long i = 0; i < n; ++i) acc += std::log(x + static_cast<double>(i));
    return acc;
  }
  return log_gamma(x + static_cast<double>(n)) - log_gamma(x);
}

inline double log_factorial(long long n) {
  if (n < 0) throw NumericRangeError("log_factorial: negative argument");
  return log_gamma(static_cast<double>(n) + 1.0);
}

inline double log_binomial(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) throw NumericRangeError("log_binomial: need 0 <= k <= n");
  if (k == 0 || k == n) return 0.0;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

}  // namespace gibbs
