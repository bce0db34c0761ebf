#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "gibbs/coefficients.hpp"
#include "gibbs/errors.hpp"
#include "gibbs/logspace.hpp"
#include "gibbs/models.hpp"
#include "gibbs/prediction.hpp"

namespace gibbs {

// Clusters allowed to receive new observations; every other observed cluster
// must stay silent for the avoidance event to hold. Indices are 0-based
// positions into sample.frequencies.
struct RetainedSet {
  std::vector<int> indices;
  long long retained_freq_sum = 0;
};

inline RetainedSet make_retained(const SampleSummary& sample, std::vector<int> indices) {
  detail::check_sample(sample);
  std::sort(indices.begin(), indices.end());
  if (indices.empty()) throw ValidationError("retained set: must keep at least one cluster");
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw ValidationError("retained set: duplicate cluster index");
  if (indices.front() < 0 || indices.back() >= sample.j)
    throw ValidationError("retained set: cluster index out of range");
  RetainedSet out;
  for (int i : indices) out.retained_freq_sum += sample.frequencies[i];
  out.indices = std::move(indices);
  return out;
}

namespace detail {

inline std::pair<int, long long> check_retained(const SampleSummary& sample,
                                                const RetainedSet& retained) {
  int r = static_cast<int>(retained.indices.size());
  if (r < 1 || r > sample.j)
    throw ValidationError("avoidance: retained set must keep between 1 and j clusters");
  long long sum = 0;
  for (int i : retained.indices) {
    if (i < 0 || i >= sample.j) throw ValidationError("avoidance: cluster index out of range");
    sum += sample.frequencies[i];
  }
  if (sum != retained.retained_freq_sum)
    throw ValidationError("avoidance: retained_freq_sum does not match the indexed frequencies");
  return {r, sum};
}

}  // namespace detail

// Generic-Gibbs avoidance path:
//   sum_{k=0}^m (V_{n+m,j+k}/V_{n,j}) C(m,k;sigma,gamma) sigma^{-k},
// gamma = r sigma - sum of retained frequencies. -gamma > 0 holds because every
// retained cluster carries at least one observation and sigma < 1.
inline double avoidance_probability_generic(const GibbsModel& model, const SampleSummary& sample,
                                            int m, const RetainedSet& retained) {
  detail::check_sample(sample);
  detail::check_m(m);
  auto [r, sum] = detail::check_retained(sample, retained);
  if (m == 0) return 1.0;
  double sigma = sigma_of(model);
  double gamma = r * sigma - static_cast<double>(sum);
  auto vr = log_v_ratios(model, sample.n, sample.j, m);
  auto sn = noncentral_scaled_row(sigma, m, gamma);
  std::vector<double> terms(m + 1);
  for (int k = 0; k <= m; ++k) terms[k] = vr[k] + sn[k];
  return std::exp(log_sum_exp(terms));
}

// P(none of the non-retained clusters reappears in the next m draws). Dirichlet
// and Poisson-Dirichlet take the closed form
//   (theta + (j-r) sigma + sum_retained)_m / (theta + n)_m.
inline double avoidance_probability(const GibbsModel& model, const SampleSummary& sample, int m,
                                    const RetainedSet& retained) {
  detail::check_sample(sample);
  detail::check_m(m);
  auto [r, sum] = detail::check_retained(sample, retained);
  if (m == 0) return 1.0;
  return std::visit([&, r = r, sum = sum](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, GeneralizedGamma>) {
      (void)f;
      return avoidance_probability_generic(model, sample, m, retained);
    } else {
      double sigma = sigma_of(model);
      double base = f.theta + (sample.j - r) * sigma + static_cast<double>(sum);
      return std::exp(log_rising_factorial(base, m) -
                      log_rising_factorial(f.theta + sample.n, m));
    }
  }, model);
}

// Probability that the j - r most expressed clusters all fail to reappear:
// sort ascending by (frequency, original index), retain the r smallest.
inline double avoid_top_expressed(const GibbsModel& model, const SampleSummary& sample, int m,
                                  int r) {
  detail::check_sample(sample);
  if (r < 1 || r > sample.j) throw ValidationError("avoid_top_expressed: need 1 <= r <= j");
  std::vector<int> order(sample.j);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sample.frequencies[a] < sample.frequencies[b];
  });
  order.resize(r);
  return avoidance_probability(model, sample, m, make_retained(sample, order));
}

namespace detail {

// Staged evaluation straight from the full joint over (new-cluster composition,
// per-retained-cluster increments): sums realization-counted masses of every
// admissible continuation and divides by nothing (ratios already taken through
// log_v_ratios). Exponential in m; meant for small-grid verification only.
inline double avoidance_probability_staged(const GibbsModel& model, const SampleSummary& sample,
                                           int m, const RetainedSet& retained) {
  check_sample(sample);
  check_m(m);
  auto [r, sum] = check_retained(sample, retained);
  (void)sum;
  double sigma = sigma_of(model);
  int n = sample.n, j = sample.j;
  auto vr = log_v_ratios(model, n, j, m);

  std::vector<double> terms;
  // lambda: increments for each retained cluster, contributing
  // multinomial(m-s; lambda) * prod (n_l - sigma)_{lambda_l}.
  std::function<void(int, int, double, double)> over_lambda = [&](int idx, int rem,
                                                                  double acc, double vterm) {
    if (idx == r - 1) {
      int nl = sample.frequencies[retained.indices[idx]];
      terms.push_back(vterm + acc - log_factorial(rem) +
                      log_rising_factorial(nl - sigma, rem));
      return;
    }
    for (int t = 0; t <= rem; ++t) {
      int nl = sample.frequencies[retained.indices[idx]];
      over_lambda(idx + 1, rem - t,
                  acc - log_factorial(t) + log_rising_factorial(nl - sigma, t), vterm);
    }
  };
  // composition: new-cluster sizes as a partition of s, contributing the
  // realization count and prod (1-sigma)_{c-1}.
  std::vector<int> comp;
  for (int s = 0; s <= m; ++s) {
    std::function<void(int, int)> comp_rec = [&](int rem, int max_part) {
      if (rem == 0) {
        int k = static_cast<int>(comp.size());
        double prod = 0.0;
        for (int c : comp) prod += log_rising_factorial(1.0 - sigma, c - 1);
        double vterm = vr[k] + log_binomial(m, s) + prod + log_configuration_count(comp) +
                       log_factorial(m - s);
        over_lambda(0, m - s, 0.0, vterm);
        return;
      }
      for (int p = std::min(rem, max_part); p >= 1; --p) {
        comp.push_back(p);
        comp_rec(rem - p, p);
        comp.pop_back();
      }
    };
    comp_rec(s, s);
  }
  return std::exp(log_sum_exp(terms));
}

}  // namespace detail

}  // namespace gibbs
