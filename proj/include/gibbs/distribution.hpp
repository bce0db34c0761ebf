#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>
#include <vector>

#include "gibbs/errors.hpp"
#include "gibbs/logspace.hpp"

namespace gibbs {

// Discrete law over integer support, stored in log space. Support is sorted,
// distinct, and carries every point the construction site considered, including
// log-zero ones; total mass must be 1 up to rounding.
struct DiscreteDistribution {
  std::vector<long long> support;
  std::vector<double> log_probs;

  double total_log_mass() const { return log_sum_exp(log_probs); }

  double log_prob(long long value) const {
    auto it = std::lower_bound(support.begin(), support.end(), value);
    if (it == support.end() || *it != value) return kNegInf;
    return log_probs[static_cast<size_t>(it - support.begin())];
  }

  double prob(long long value) const { return std::exp(log_prob(value)); }

  double mean() const {
    double acc = 0.0;
    for (size_t i = 0; i < support.size(); ++i)
      acc += static_cast<double>(support[i]) * std::exp(log_probs[i]);
    return acc;
  }

  double variance() const {
    double mu = mean(), acc = 0.0;
    for (size_t i = 0; i < support.size(); ++i) {
      double d = static_cast<double>(support[i]) - mu;
      acc += d * d * std::exp(log_probs[i]);
    }
    return acc;
  }
};

// Joint law over (k, l) pairs, same storage conventions.
struct JointDistribution {
  std::vector<std::pair<int, int>> support;
  std::vector<double> log_probs;

  double total_log_mass() const { return log_sum_exp(log_probs); }
};

namespace detail {

inline void check_distribution(const DiscreteDistribution& d) {
  if (d.support.size() != d.log_probs.size())
    throw ValidationError("distribution: support/log_probs size mismatch");
  if (d.support.empty()) throw ValidationError("distribution: empty support");
  for (size_t i = 1; i < d.support.size(); ++i)
    if (d.support[i] <= d.support[i - 1])
      throw ValidationError("distribution: support must be strictly increasing");
}

}  // namespace detail

struct HPDInterval {
  long long lower = 0;
  long long upper = 0;
  double attained_mass = 0.0;
};

// Shortest contiguous support interval holding at least `level` mass; ties in
// length break toward the smaller lower endpoint.
inline HPDInterval hpd_interval(const DiscreteDistribution& d, double level) {
  detail::check_distribution(d);
  if (!(level > 0.0 && level < 1.0))
    throw ValidationError("hpd_interval: level must lie in (0,1)");
  size_t m = d.support.size();
  std::vector<double> prefix(m + 1, 0.0);
  for (size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + std::exp(d.log_probs[i]);
  double total = prefix[m];
  if (std::abs(total - 1.0) > 1e-6)
    throw NumericRangeError("hpd_interval: distribution mass is " + std::to_string(total) +
                            ", expected 1");
  // Scale by the (near-one) total so rounding in the tail cannot make the
  // requested level unreachable.
  double target = level * total;

  HPDInterval best;
  bool found = false;
  size_t hi = 0;
  for (size_t lo = 0; lo < m; ++lo) {
    if (hi < lo) hi = lo;
    while (hi < m && prefix[hi + 1] - prefix[lo] < target) ++hi;
    if (hi == m) break;  // windows starting this far right no longer reach the mass
    long long len = d.support[hi] - d.support[lo];
    if (!found || len < best.upper - best.lower) {
      best = {d.support[lo], d.support[hi], prefix[hi + 1] - prefix[lo]};
      found = true;
    }
    // Equal length keeps the earlier (smaller lower) window already stored.
  }
  return best;
}

// CSV dump: header value,log_prob,prob with 12 significant digits.
inline void write_csv(std::ostream& os, const DiscreteDistribution& d) {
  detail::check_distribution(d);
  os << "value,log_prob,prob\n";
  char buf[96];
  for (size_t i = 0; i < d.support.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g", d.support[i], d.log_probs[i],
                  std::exp(d.log_probs[i]));
    os << buf << "\n";
  }
}

}  // namespace gibbs
