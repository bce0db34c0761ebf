#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "gibbs/coefficients.hpp"
#include "gibbs/distribution.hpp"
#include "gibbs/errors.hpp"
#include "gibbs/logspace.hpp"
#include "gibbs/models.hpp"

namespace gibbs {

// Sizes of the new clusters a future sample of size m opens: k clusters holding
// s observations in total.
struct NewClusterConfiguration {
  int k = 0;
  int s = 0;
  std::vector<int> composition;
};

inline void validate_configuration(const NewClusterConfiguration& cfg, int m) {
  if (cfg.k != static_cast<int>(cfg.composition.size()))
    throw ValidationError("configuration: k must equal the composition length");
  int total = 0;
  for (int c : cfg.composition) {
    if (c < 1) throw ValidationError("configuration: block sizes must be >= 1");
    total += c;
  }
  if (total != cfg.s) throw ValidationError("configuration: s must equal the composition sum");
  if (cfg.s > m) throw ValidationError("configuration: s cannot exceed m");
}

// log of the number of set-partition realizations of a composition:
// s! / (prod_i s_i! * prod_r m_r!) with m_r the multiplicity of size r.
inline double log_configuration_count(std::span<const int> composition) {
  int s = 0;
  std::map<int, int> mult;
  for (int c : composition) {
    if (c < 1) throw ValidationError("configuration count: block sizes must be >= 1");
    s += c;
    ++mult[c];
  }
  double acc = log_factorial(s);
  for (int c : composition) acc -= log_factorial(c);
  for (const auto& [size, count] : mult) acc -= log_factorial(count);
  return acc;
}

namespace detail {

inline void check_sample(const SampleSummary& s) {
  if (s.j < 1 || s.j > s.n || static_cast<int>(s.frequencies.size()) != s.j)
    throw ValidationError("sample: inconsistent summary");
}

inline void check_m(int m) {
  if (m < 0) throw ValidationError("future sample size m must be >= 0");
}

}  // namespace detail

// log V_{n+m,j+k} - log V_{n,j} for k = 0..m. Closed-form increments for the
// Dirichlet and Poisson-Dirichlet families; the generalized gamma case walks the
// cached weights.
inline std::vector<double> log_v_ratios(const GibbsModel& model, int n, int j, int m) {
  if (j < 1 || j > n) throw ValidationError("log_v_ratios: need 1 <= j <= n");
  detail::check_m(m);
  std::vector<double> vr(m + 1);
  std::visit([&](const auto& f) {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>) {
      double base = -log_rising_factorial(f.theta + n, m);
      for (int k = 0; k <= m; ++k) vr[k] = base + k * std::log(f.theta);
    } else if constexpr (std::is_same_v<F, PoissonDirichlet>) {
      vr[0] = -log_rising_factorial(f.theta + n, m);
      for (int k = 1; k <= m; ++k)
        vr[k] = vr[k - 1] + std::log(f.theta + (j + k - 1) * f.sigma);
    } else {
      double base = f.cache->log_weight(n, j);
      for (int k = 0; k <= m; ++k) vr[k] = f.cache->log_weight(n + m, j + k) - base;
    }
  }, model);
  return vr;
}

// log P(K_m = k, L_m = s, new cluster sizes = composition), per set-partition
// realization: multiply by exp(log_configuration_count) to aggregate over the
// realizations sharing the composition.
inline double joint_config_logprob(const GibbsModel& model, const SampleSummary& sample, int m,
                                   const NewClusterConfiguration& cfg) {
  detail::check_sample(sample);
  detail::check_m(m);
  validate_configuration(cfg, m);
  double sigma = sigma_of(model);
  int n = sample.n, j = sample.j;
  double acc = log_weight(model, n + m, j + cfg.k) - log_weight(model, n, j);
  acc += log_binomial(m, cfg.s);
  if (m > cfg.s) acc += log_rising_factorial(n - j * sigma, m - cfg.s);
  for (int c : cfg.composition) acc += log_rising_factorial(1.0 - sigma, c - 1);
  return acc;
}

// Joint law of (K_m, L_m) over 0 <= k <= s <= m.
inline JointDistribution kl_joint_distribution(const GibbsModel& model,
                                               const SampleSummary& sample, int m) {
  detail::check_sample(sample);
  detail::check_m(m);
  double sigma = sigma_of(model);
  int n = sample.n, j = sample.j;
  auto vr = log_v_ratios(model, n, j, m);

  JointDistribution out;
  if (m == 0) {
    out.support = {{0, 0}};
    out.log_probs = {0.0};
    return out;
  }
  // Stream rows s = 0..m of the scaled coefficient triangle.
  std::vector<double> lrf_rest(m + 1);
  for (int s = 0; s <= m; ++s)
    lrf_rest[s] = log_rising_factorial(n - j * sigma, m - s);
  std::vector<double> row{0.0};
  std::vector<std::vector<double>> by_s(m + 1);
  for (int s = 0;; ++s) {
    by_s[s].assign(row.begin(), row.end());
    if (s == m) break;
    detail::advance_scaled_row(row, s, sigma);
  }
  for (int k = 0; k <= m; ++k) {
    for (int s = k; s <= m; ++s) {
      out.support.emplace_back(k, s);
      out.log_probs.push_back(vr[k] + log_binomial(m, s) + lrf_rest[s] + by_s[s][k]);
    }
  }
  return out;
}

// Marginal law of K_m, the number of new clusters.
inline DiscreteDistribution k_distribution(const GibbsModel& model, const SampleSummary& sample,
                                           int m) {
  detail::check_sample(sample);
  detail::check_m(m);
  DiscreteDistribution out;
  if (m == 0) {
    out.support = {0};
    out.log_probs = {0.0};
    return out;
  }
  double sigma = sigma_of(model);
  int n = sample.n, j = sample.j;
  auto vr = log_v_ratios(model, n, j, m);
  auto sn = noncentral_scaled_row(sigma, m, -static_cast<double>(n) + j * sigma);
  out.support.resize(m + 1);
  out.log_probs.resize(m + 1);
  for (int k = 0; k <= m; ++k) {
    out.support[k] = k;
    out.log_probs[k] = vr[k] + sn[k];
  }
  return out;
}

// Marginal law of L_m, the number of observations falling in new clusters.
inline DiscreteDistribution l_distribution(const GibbsModel& model, const SampleSummary& sample,
                                           int m) {
  detail::check_sample(sample);
  detail::check_m(m);
  DiscreteDistribution out;
  if (m == 0) {
    out.support = {0};
    out.log_probs = {0.0};
    return out;
  }
  double sigma = sigma_of(model);
  int n = sample.n, j = sample.j;
  out.support.resize(m + 1);
  out.log_probs.resize(m + 1);
  for (int s = 0; s <= m; ++s) out.support[s] = s;

  bool closed = std::visit([&](const auto& f) {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, GeneralizedGamma>) {
      (void)f;
      return false;
    } else {
      double shifted = f.theta + j * sigma;
      for (int s = 0; s <= m; ++s)
        out.log_probs[s] = log_binomial(m, s) + log_rising_factorial(n - j * sigma, m - s) +
                           log_rising_factorial(shifted, s) -
                           log_rising_factorial(f.theta + n, m);
      return true;
    }
  }, model);
  if (!closed) {
    auto vr = log_v_ratios(model, n, j, m);
    std::vector<double> row{0.0};
    std::vector<double> inner(m + 1);
    for (int s = 0;; ++s) {
      std::vector<double> terms(s + 1);
      for (int k = 0; k <= s; ++k) terms[k] = vr[k] + row[k];
      inner[s] = log_sum_exp(terms);
      if (s == m) break;
      detail::advance_scaled_row(row, s, sigma);
    }
    for (int s = 0; s <= m; ++s)
      out.log_probs[s] = log_binomial(m, s) +
                         log_rising_factorial(n - j * sigma, m - s) + inner[s];
  }
  return out;
}

// Law of L_m given K_m = k; depends on the model only through sigma.
inline DiscreteDistribution l_given_k_distribution(double sigma, int n, int j, int m, int k) {
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw ValidationError("l_given_k: sigma must lie in [0,1)");
  if (j < 1 || j > n) throw ValidationError("l_given_k: need 1 <= j <= n");
  detail::check_m(m);
  if (k < 0 || k > m) throw ValidationError("l_given_k: need 0 <= k <= m");
  DiscreteDistribution out;
  if (m == 0) {
    out.support = {0};
    out.log_probs = {0.0};
    return out;
  }
  double denom = log_noncentral_scaled(m, k, sigma, -static_cast<double>(n) + j * sigma);
  // Column k of the scaled triangle, streamed.
  std::vector<double> col(m + 1, kNegInf);
  std::vector<double> row{0.0};
  for (int s = 0;; ++s) {
    if (k <= s) col[s] = row[k];
    if (s == m) break;
    detail::advance_scaled_row(row, s, sigma);
  }
  for (int s = k; s <= m; ++s) {
    out.support.push_back(s);
    out.log_probs.push_back(log_binomial(m, s) +
                            log_rising_factorial(n - j * sigma, m - s) + col[s] - denom);
  }
  return out;
}

// Law of K_m given L_m = s.
inline DiscreteDistribution k_given_l_distribution(const GibbsModel& model,
                                                   const SampleSummary& sample, int m, int s) {
  detail::check_sample(sample);
  detail::check_m(m);
  if (s < 0 || s > m) throw ValidationError("k_given_l: need 0 <= s <= m");
  double sigma = sigma_of(model);
  auto vr = log_v_ratios(model, sample.n, sample.j, m);
  auto row = scaled_coeff_row(sigma, s);
  std::vector<double> raw(s + 1);
  for (int k = 0; k <= s; ++k) raw[k] = vr[k] + row[k];
  double norm = log_sum_exp(raw);
  DiscreteDistribution out;
  out.support.resize(s + 1);
  out.log_probs.resize(s + 1);
  for (int k = 0; k <= s; ++k) {
    out.support[k] = k;
    out.log_probs[k] = raw[k] - norm;
  }
  return out;
}

inline double expected_new_clusters(const GibbsModel& model, const SampleSummary& sample, int m) {
  return k_distribution(model, sample, m).mean();
}

// E[L_m] in ratio form: m V_{n+1,j+1} / V_{n,j}.
inline double expected_new_observations(const GibbsModel& model, const SampleSummary& sample,
                                        int m) {
  detail::check_sample(sample);
  detail::check_m(m);
  if (m == 0) return 0.0;
  return m * new_cluster_prob(model, sample.n, sample.j);
}

// E[L_m] as the summation over its marginal law; equal to the ratio form.
inline double expected_new_observations_sum(const GibbsModel& model, const SampleSummary& sample,
                                            int m) {
  return l_distribution(model, sample, m).mean();
}

// Conditional EPPF weight for the partition of the s new-cluster observations:
//   V_{n+m,j+k} / sum_{i=0}^s V_{n+m,j+i} C(s,i;sigma) sigma^{-i}.
// Evaluated generically from weight ratios; closed forms below bypass it.
inline double conditional_eppf_weight_generic(const GibbsModel& model, int m, int n, int j, int s,
                                              int k) {
  if (j < 1 || j > n) throw ValidationError("conditional weight: need 1 <= j <= n");
  if (k < 0 || k > s || s > m) throw ValidationError("conditional weight: need 0 <= k <= s <= m");
  if (s >= 1 && k == 0) throw ValidationError("conditional weight: k = 0 requires s = 0");
  double sigma = sigma_of(model);
  auto vr = log_v_ratios(model, n, j, m);
  auto row = scaled_coeff_row(sigma, s);
  std::vector<double> terms(s + 1);
  for (int i = 0; i <= s; ++i) terms[i] = vr[i] + row[i];
  return vr[k] - log_sum_exp(terms);
}

inline double conditional_eppf_weight(const GibbsModel& model, int m, int n, int j, int s, int k) {
  if (j < 1 || j > n) throw ValidationError("conditional weight: need 1 <= j <= n");
  if (k < 0 || k > s || s > m) throw ValidationError("conditional weight: need 0 <= k <= s <= m");
  if (s >= 1 && k == 0) throw ValidationError("conditional weight: k = 0 requires s = 0");
  return std::visit([&](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>) {
      return k * std::log(f.theta) - log_rising_factorial(f.theta, s);
    } else if constexpr (std::is_same_v<F, PoissonDirichlet>) {
      // Quasi-conjugacy: same family with theta shifted to theta + j sigma.
      double shifted = f.theta + j * f.sigma;
      double acc = 0.0;
      for (int i = 1; i < k; ++i) acc += std::log(shifted + i * f.sigma);
      if (s >= 1) acc -= log_rising_factorial(shifted + 1.0, s - 1);
      return acc;
    } else {
      (void)f;
      return conditional_eppf_weight_generic(model, m, n, j, s, k);
    }
  }, model);
}

// log probability of a specific partition (composition) of the s new-cluster
// observations, conditionally on L_m = s; per set-partition realization.
inline double conditional_config_logprob(const GibbsModel& model, const SampleSummary& sample,
                                         int m, int s, std::span<const int> composition) {
  detail::check_sample(sample);
  detail::check_m(m);
  double sigma = sigma_of(model);
  int total = 0;
  for (int c : composition) {
    if (c < 1) throw ValidationError("conditional config: block sizes must be >= 1");
    total += c;
  }
  if (total != s) throw ValidationError("conditional config: composition must sum to s");
  int k = static_cast<int>(composition.size());
  if (s > m) throw ValidationError("conditional config: composition sum exceeds m");
  double acc = conditional_eppf_weight(model, m, sample.n, sample.j, s, k);
  for (int c : composition) acc += log_rising_factorial(1.0 - sigma, c - 1);
  return acc;
}

// log P(composition | K_m = k, L_m = s): prod (1-sigma)_{s_i-1} normalized by the
// scaled coefficient, model-free given sigma; per set-partition realization.
inline double config_given_k_l_logprob(double sigma, int s, int k,
                                       std::span<const int> composition) {
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw ValidationError("config_given_k_l: sigma must lie in [0,1)");
  if (static_cast<int>(composition.size()) != k)
    throw ValidationError("config_given_k_l: k must equal the composition length");
  int total = 0;
  double acc = 0.0;
  for (int c : composition) {
    if (c < 1) throw ValidationError("config_given_k_l: block sizes must be >= 1");
    total += c;
    acc += log_rising_factorial(1.0 - sigma, c - 1);
  }
  if (total != s) throw ValidationError("config_given_k_l: composition must sum to s");
  return acc - scaled_coeff_row(sigma, s)[k];
}

// Odds between two configurations of the same total size under the conditional
// configuration law: prod (1-sigma)_{a_i-1} / prod (1-sigma)_{b_i-1}.
inline double configuration_odds(double sigma, std::span<const int> a, std::span<const int> b) {
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw ValidationError("configuration_odds: sigma must lie in [0,1)");
  long long sum_a = 0, sum_b = 0;
  double la = 0.0, lb = 0.0;
  for (int c : a) {
    if (c < 1) throw ValidationError("configuration_odds: block sizes must be >= 1");
    sum_a += c;
    la += log_rising_factorial(1.0 - sigma, c - 1);
  }
  for (int c : b) {
    if (c < 1) throw ValidationError("configuration_odds: block sizes must be >= 1");
    sum_b += c;
    lb += log_rising_factorial(1.0 - sigma, c - 1);
  }
  if (sum_a != sum_b)
    throw ValidationError("configuration_odds: totals differ (" + std::to_string(sum_a) +
                          " vs " + std::to_string(sum_b) + ")");
  return std::exp(la - lb);
}

struct AverageExpression {
  double a_m = 0.0;      // expected size of a new cluster, E[L]/E[K]
  double a_total = 0.0;  // average over the enlarged sample, (n+m)/(j+E[K])
};

inline AverageExpression average_expression(const SampleSummary& sample, int m, double e_k,
                                            double e_l) {
  detail::check_sample(sample);
  detail::check_m(m);
  if (!(e_k > 0.0)) throw ValidationError("average_expression: E[K] must be positive");
  if (e_l < 0.0) throw ValidationError("average_expression: E[L] must be nonnegative");
  AverageExpression out;
  out.a_m = e_l / e_k;
  out.a_total = (sample.n + m) / (sample.j + e_k);
  return out;
}

}  // namespace gibbs
