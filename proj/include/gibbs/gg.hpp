#pragma once

#include <boost/multiprecision/mpfr.hpp>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>

#include "gibbs/errors.hpp"
#include "gibbs/logspace.hpp"

namespace gibbs {
namespace detail {

using mp = boost::multiprecision::mpfr_float;

// E_1(x) = Gamma(0,x) by alternating series; x is small here (it equals beta),
// so cancellation costs only ~x*log2(e) bits against our working precision.
inline mp exp_integral_e1(const mp& x) {
  mp euler;
  mpfr_const_euler(euler.backend().data(), MPFR_RNDN);
  mp term = x, sum = x;
  long prec = mpfr_get_prec(x.backend().data());
  mp eps = ldexp(mp(1), -static_cast<int>(prec + 32));
  for (long j = 1; j < 100000; ++j) {
    term *= -x * static_cast<double>(j);
    term /= static_cast<double>(j + 1) * static_cast<double>(j + 1);
    sum += term;
    if (abs(term) < eps * (abs(sum) + 1)) break;
  }
  return -euler - log(x) + sum;
}

// Upper incomplete gamma Gamma(a, x) for real a (any sign), x > 0. Fractional a
// is anchored at a0 = frac(a)+1 in (1,2] via mpfr_gamma_inc and walked with the
// one-step recurrence Gamma(a+1,x) = a Gamma(a,x) + x^a e^{-x}; ascent only adds
// positive terms, descent divides a bounded difference.
inline mp upper_gamma(const mp& a, const mp& x) {
  auto xpow_emx = [&](const mp& t) { return exp(t * log(x) - x); };
  mp fl = floor(a);
  if (a == fl) {
    long ai = fl.convert_to<long>();
    if (ai >= 1) {
      mp term(1), sum(1);
      for (long i = 1; i < ai; ++i) {
        term *= x;
        term /= static_cast<double>(i);
        sum += term;
      }
      mp fact(1);
      for (long i = 2; i < ai; ++i) fact *= static_cast<double>(i);
      return fact * exp(-x) * sum;
    }
    mp g = exp_integral_e1(x);
    for (mp t(0); t > a; t -= 1) g = (g - xpow_emx(t - 1)) / (t - 1);
    return g;
  }
  mp base = a - fl + 1;  // in (1,2)
  mp g;
  mpfr_gamma_inc(g.backend().data(), base.backend().data(), x.backend().data(), MPFR_RNDN);
  long d = fl.convert_to<long>() - 1;  // a = base + d
  if (d >= 0) {
    mp t = base;
    for (long s = 0; s < d; ++s) {
      g = t * g + xpow_emx(t);
      t += 1;
    }
  } else {
    mp t = base;
    for (long s = 0; s < -d; ++s) {
      g = (g - xpow_emx(t - 1)) / (t - 1);
      t -= 1;
    }
  }
  return g;
}

}  // namespace detail

// Normalized generalized gamma weights
//   V_{n,k} = e^beta sigma^{k-1} / Gamma(n) *
//             sum_{i=0}^{n-1} binom(n-1,i) (-1)^i beta^{i/sigma} Gamma(k - i/sigma; beta).
// The alternating sum cancels catastrophically in doubles, so it runs under MPFR
// at a precision budgeted from n, beta and sigma, with an explicit post-check
// that at least 10 significant bits survived.
class GgWeightCache {
 public:
  GgWeightCache(double sigma, double beta, int n_cap = 200)
      : sigma_(sigma), beta_(beta), cap_(n_cap) {
    if (!(sigma > 0.0 && sigma < 1.0))
      throw ValidationError("gg: requires sigma in (0,1), got " + std::to_string(sigma));
    if (!(beta > 0.0))
      throw ValidationError("gg: requires beta > 0, got " + std::to_string(beta));
  }

  double sigma() const { return sigma_; }
  double beta() const { return beta_; }
  int n_cap() const { return cap_; }

  double log_weight(int n, int k) const {
    if (n < 1 || k < 1 || k > n)
      throw ValidationError("gg log_weight: need 1 <= k <= n");
    if (n > cap_)
      throw NumericRangeError("gg weights support n <= " + std::to_string(cap_) +
                              ", requested n=" + std::to_string(n));
    uint64_t key = (static_cast<uint64_t>(n) << 32) | static_cast<uint32_t>(k);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double v = compute(n, k);
    memo_.emplace(key, v);
    return v;
  }

 private:
  double compute(int n, int k) const {
    using detail::mp;
    // Incomplete-gamma evaluation cost grows without bound in beta (both the
    // series length and the cancellation budget scale with it).
    if (beta_ > 400.0)
      throw NumericRangeError("gg weight evaluation is limited to beta <= 400, got " +
                              std::to_string(beta_));
    double lb2beta = std::log2(beta_);
    long bits = 64 + std::max<long>(128, 4L * n) +
                static_cast<long>(std::ceil(n / sigma_ * std::abs(lb2beta))) +
                static_cast<long>(std::ceil(4.4 * beta_)) +
                static_cast<long>(std::ceil(std::max(0.0, std::lgamma(std::max(k, 2) * 1.0) /
                                                              std::log(2.0))));
    // Cancellation grows with beta and with n/sigma; past this budget a single
    // weight would take minutes, so treat the parameter corner as out of range.
    if (bits > 65536)
      throw NumericRangeError("gg weight precision budget exceeds 65536 bits at sigma=" +
                              std::to_string(sigma_) + ", beta=" + std::to_string(beta_));
    unsigned digits10 = static_cast<unsigned>(bits * 0.30103) + 8;
    mp::default_precision(digits10);

    mp x(beta_);
    mp bstep = exp(log(x) / sigma_);  // beta^{1/sigma}
    mp bpow(1), binom(1), sum(0);
    long max_exp = std::numeric_limits<long>::min();
    for (long i = 0; i < n; ++i) {
      mp a = mp(k) - mp(static_cast<double>(i)) / sigma_;
      mp term = binom * bpow * detail::upper_gamma(a, x);
      if (!term.is_zero())
        max_exp = std::max(max_exp, static_cast<long>(mpfr_get_exp(term.backend().data())));
      if (i % 2)
        sum -= term;
      else
        sum += term;
      binom *= static_cast<double>(n - 1 - i);
      binom /= static_cast<double>(i + 1);
      bpow *= bstep;
    }
    if (sum <= 0)
      throw NumericRangeError("gg weight V(" + std::to_string(n) + "," + std::to_string(k) +
                              "): alternating sum lost all precision");
    long sum_exp = static_cast<long>(mpfr_get_exp(sum.backend().data()));
    long prec_bits = static_cast<long>(digits10 / 0.30103);
    if (max_exp != std::numeric_limits<long>::min() && max_exp - sum_exp > prec_bits - 10)
      throw NumericRangeError("gg weight V(" + std::to_string(n) + "," + std::to_string(k) +
                              "): fewer than 10 significant bits survive cancellation");
    return beta_ + (k - 1) * std::log(sigma_) - log_gamma(static_cast<double>(n)) +
           log(sum).convert_to<double>();
  }

  double sigma_, beta_;
  int cap_;
  mutable std::mutex mu_;
  mutable std::unordered_map<uint64_t, double> memo_;
};

}  // namespace gibbs
