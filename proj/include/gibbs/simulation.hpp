#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "gibbs/distribution.hpp"
#include "gibbs/models.hpp"
#include "gibbs/prediction.hpp"

namespace gibbs {

struct PartitionState {
  int n = 0;
  std::vector<int> cluster_sizes;

  int j() const { return static_cast<int>(cluster_sizes.size()); }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based uniform stream: the t-th variate is a pure function of
// (seed, t), so replicated or resumed runs reproduce exactly.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() {
    return detail::mix64(seed_ + (++counter_) * 0x9E3779B97F4A7C15ull);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Independent stream for a parallel replicate; depends only on (seed, index).
  RngStream for_replicate(std::uint64_t index) const {
    return RngStream(detail::mix64(seed_ ^ detail::mix64(index + 0x632BE59BD9B4E019ull)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

namespace detail {

// Picks an existing cluster with probability proportional to (size - sigma).
// The caller has already decided against a new cluster, and the proportional
// weights sum to n - j*sigma analytically, so one uniform draw suffices.
inline int pick_existing(const std::vector<int>& sizes, double sigma, double u) {
  double total = 0.0;
  for (int c : sizes) total += c - sigma;
  double target = u * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    acc += sizes[i] - sigma;
    if (target < acc) return static_cast<int>(i);
  }
  return static_cast<int>(sizes.size()) - 1;
}

}  // namespace detail

// Sequential predictive sampler: grows a partition of [n] one element at a
// time, so the resulting law is exactly the model's EPPF.
inline PartitionState sample_partition(const GibbsModel& model, int n, RngStream& rng) {
  if (n < 1) throw ValidationError("sample_partition: n must be >= 1");
  double sigma = sigma_of(model);
  PartitionState st;
  st.n = 1;
  st.cluster_sizes = {1};
  for (int t = 1; t < n; ++t) {
    double p_new = new_cluster_prob(model, st.n, st.j());
    if (rng.next_double() < p_new) {
      st.cluster_sizes.push_back(1);
    } else {
      int i = detail::pick_existing(st.cluster_sizes, sigma, rng.next_double());
      ++st.cluster_sizes[i];
    }
    ++st.n;
  }
  return st;
}

struct FutureDraw {
  NewClusterConfiguration config;  // composition sorted ascending
  std::vector<int> lambda;         // per-old-cluster increments, length j
};

// One draw of the additional m-sample's allocation, continuing the predictive
// chain from the conditioning sample.
inline FutureDraw sample_future(const GibbsModel& model, const SampleSummary& sample, int m,
                                RngStream& rng) {
  detail::check_sample(sample);
  if (m < 1) throw ValidationError("sample_future: m must be >= 1");
  double sigma = sigma_of(model);
  int j = sample.j;
  std::vector<int> sizes = sample.frequencies;
  std::vector<int> lambda(j, 0);
  int n_cur = sample.n;
  for (int t = 0; t < m; ++t) {
    double p_new = new_cluster_prob(model, n_cur, static_cast<int>(sizes.size()));
    if (rng.next_double() < p_new) {
      sizes.push_back(1);
    } else {
      int i = detail::pick_existing(sizes, sigma, rng.next_double());
      ++sizes[i];
      if (i < j) ++lambda[i];
    }
    ++n_cur;
  }
  FutureDraw out;
  out.lambda = std::move(lambda);
  out.config.composition.assign(sizes.begin() + j, sizes.end());
  std::sort(out.config.composition.begin(), out.config.composition.end());
  out.config.k = static_cast<int>(out.config.composition.size());
  for (int c : out.config.composition) out.config.s += c;
  return out;
}

struct ConditionalOutcome {
  NewClusterConfiguration config;  // composition sorted ascending
  std::vector<int> lambda;         // old-cluster increments, length j
  double log_prob = kNegInf;       // aggregated over realizations and orderings
};

inline constexpr int kEnumerationCap = 12;

// Exhaustive extension of the conditioning partition by m elements, merged
// over states (sorted new composition, lambda). Each transition multiplies the
// one-step predictive probability by the number of concrete clusters it can
// target, so a terminal row carries the total probability of its outcome.
inline std::vector<ConditionalOutcome> enumerate_conditional(const GibbsModel& model,
                                                             const SampleSummary& sample, int m) {
  detail::check_sample(sample);
  detail::check_m(m);
  if (sample.n + m > kEnumerationCap)
    throw NumericRangeError("enumerate_conditional: n + m exceeds the enumeration cap");
  int j = sample.j;
  using State = std::pair<std::vector<int>, std::vector<int>>;  // (lambda, new sizes sorted)
  std::map<State, double> cur;
  cur[{std::vector<int>(j, 0), {}}] = 0.0;
  for (int t = 0; t < m; ++t) {
    int n_cur = sample.n + t;
    std::map<State, double> next;
    auto deposit = [&next](State&& st, double lp) {
      auto [it, fresh] = next.try_emplace(std::move(st), lp);
      if (!fresh) it->second = log_add(it->second, lp);
    };
    for (const auto& [state, lp] : cur) {
      const auto& [lambda, news] = state;
      int j_tot = j + static_cast<int>(news.size());
      double lp_new = std::log(new_cluster_prob(model, n_cur, j_tot));
      {
        State st{lambda, news};
        st.second.insert(st.second.begin(), 1);
        deposit(std::move(st), lp + lp_new);
      }
      for (int i = 0; i < j; ++i) {
        double p = existing_cluster_prob(model, n_cur, j_tot, sample.frequencies[i] + lambda[i]);
        State st{lambda, news};
        ++st.first[i];
        deposit(std::move(st), lp + std::log(p));
      }
      // Identical new sizes are merged, so weight the step by how many
      // concrete clusters share that size.
      for (std::size_t a = 0; a < news.size(); ++a) {
        if (a > 0 && news[a] == news[a - 1]) continue;
        int mult = 0;
        for (int c : news)
          if (c == news[a]) ++mult;
        double p = existing_cluster_prob(model, n_cur, j_tot, news[a]);
        State st{lambda, news};
        ++st.second[a];
        std::sort(st.second.begin(), st.second.end());
        deposit(std::move(st), lp + std::log(p) + std::log(static_cast<double>(mult)));
      }
    }
    cur = std::move(next);
  }
  std::vector<ConditionalOutcome> rows;
  rows.reserve(cur.size());
  for (auto& [state, lp] : cur) {
    ConditionalOutcome row;
    row.lambda = state.first;
    row.config.composition = state.second;
    row.config.k = static_cast<int>(state.second.size());
    for (int c : state.second) row.config.s += c;
    row.log_prob = lp;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double oracle_total_log_mass(const std::vector<ConditionalOutcome>& rows) {
  std::vector<double> terms;
  terms.reserve(rows.size());
  for (const auto& r : rows) terms.push_back(r.log_prob);
  return log_sum_exp(terms);
}

inline DiscreteDistribution oracle_k_marginal(const std::vector<ConditionalOutcome>& rows, int m) {
  std::vector<std::vector<double>> acc(m + 1);
  for (const auto& r : rows) acc[r.config.k].push_back(r.log_prob);
  DiscreteDistribution d;
  for (int k = 0; k <= m; ++k) {
    d.support.push_back(k);
    d.log_probs.push_back(acc[k].empty() ? kNegInf : log_sum_exp(acc[k]));
  }
  return d;
}

inline DiscreteDistribution oracle_l_marginal(const std::vector<ConditionalOutcome>& rows, int m) {
  std::vector<std::vector<double>> acc(m + 1);
  for (const auto& r : rows) acc[r.config.s].push_back(r.log_prob);
  DiscreteDistribution d;
  for (int s = 0; s <= m; ++s) {
    d.support.push_back(s);
    d.log_probs.push_back(acc[s].empty() ? kNegInf : log_sum_exp(acc[s]));
  }
  return d;
}

inline JointDistribution oracle_kl_marginal(const std::vector<ConditionalOutcome>& rows, int m) {
  std::map<std::pair<int, int>, std::vector<double>> acc;
  for (const auto& r : rows) acc[{r.config.k, r.config.s}].push_back(r.log_prob);
  JointDistribution d;
  for (int k = 0; k <= m; ++k)
    for (int s = k; s <= m; ++s) {
      d.support.emplace_back(k, s);
      auto it = acc.find({k, s});
      d.log_probs.push_back(it == acc.end() ? kNegInf : log_sum_exp(it->second));
    }
  return d;
}

// Aggregated probability of one composition (summed over lambda).
inline double oracle_config_log_mass(const std::vector<ConditionalOutcome>& rows,
                                     std::span<const int> composition) {
  std::vector<int> key(composition.begin(), composition.end());
  std::sort(key.begin(), key.end());
  std::vector<double> terms;
  for (const auto& r : rows)
    if (r.config.composition == key) terms.push_back(r.log_prob);
  if (terms.empty()) return kNegInf;
  return log_sum_exp(terms);
}

// Probability that no new element lands in a forbidden old cluster. Retained
// indices address sample.frequencies; all-new clusters are always allowed.
inline double oracle_avoidance(const std::vector<ConditionalOutcome>& rows, int j,
                               const std::vector<int>& retained_indices) {
  std::vector<bool> keep(j, false);
  for (int i : retained_indices) keep[i] = true;
  std::vector<double> terms;
  for (const auto& r : rows) {
    bool ok = true;
    for (int i = 0; i < j && ok; ++i)
      if (!keep[i] && r.lambda[i] > 0) ok = false;
    if (ok) terms.push_back(r.log_prob);
  }
  return terms.empty() ? 0.0 : std::exp(log_sum_exp(terms));
}

struct McCell {
  long long value = 0;   // k, s, or packed k*(m+1)+s for joint cells
  double expected = 0.0;    // reps * analytic probability
  long long observed = 0;
  double z = 0.0;
};

struct McReport {
  long long reps = 0;
  std::vector<McCell> k_cells, l_cells, kl_cells;
  int excluded_cells = 0;  // expected count below the normal-approximation floor
  double max_abs_z = 0.0;
};

namespace detail {

// Cells with expected count < 5 are excluded from the max-|z| summary: the
// normal approximation to a binomial count is not trustworthy there.
inline constexpr double kMcExpectedFloor = 5.0;

inline void z_scores(const std::map<long long, long long>& counts,
                     const std::vector<long long>& values, const std::vector<double>& probs,
                     long long reps, std::vector<McCell>& out, int& excluded,
                     double& max_abs_z) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    double expected = static_cast<double>(reps) * probs[i];
    auto it = counts.find(values[i]);
    long long obs = it == counts.end() ? 0 : it->second;
    if (expected < kMcExpectedFloor) {
      ++excluded;
      continue;
    }
    double se = std::sqrt(expected * (1.0 - probs[i]));
    McCell cell{values[i], expected, obs, (static_cast<double>(obs) - expected) / se};
    max_abs_z = std::max(max_abs_z, std::abs(cell.z));
    out.push_back(cell);
  }
}

}  // namespace detail

// Empirical counts of (k, s) over independent replicates; each replicate uses
// a stream derived from (seed, replicate-index), so any parallel schedule
// reproduces the same tallies.
inline std::map<std::pair<int, int>, long long> mc_tally(const GibbsModel& model,
                                                            const SampleSummary& sample, int m,
                                                            long long reps,
                                                            const RngStream& rng) {
  std::map<std::pair<int, int>, long long> counts;
  for (long long rep = 0; rep < reps; ++rep) {
    RngStream local = rng.for_replicate(static_cast<std::uint64_t>(rep));
    FutureDraw draw = sample_future(model, sample, m, local);
    ++counts[{draw.config.k, draw.config.s}];
  }
  return counts;
}

inline McReport mc_compare(const GibbsModel& model, const SampleSummary& sample, int m,
                           long long reps, const RngStream& rng) {
  if (reps < 10000) throw ValidationError("mc_compare: reps must be >= 10000");
  auto joint_counts = mc_tally(model, sample, m, reps, rng);
  std::map<long long, long long> k_counts, l_counts, kl_counts;
  for (const auto& [ks, c] : joint_counts) {
    k_counts[ks.first] += c;
    l_counts[ks.second] += c;
    kl_counts[static_cast<long long>(ks.first) * (m + 1) + ks.second] += c;
  }
  McReport rep;
  rep.reps = reps;

  auto kd = k_distribution(model, sample, m);
  std::vector<double> kp(kd.log_probs.size());
  for (std::size_t i = 0; i < kp.size(); ++i) kp[i] = std::exp(kd.log_probs[i]);
  detail::z_scores(k_counts, kd.support, kp, reps, rep.k_cells, rep.excluded_cells,
                   rep.max_abs_z);

  auto ld = l_distribution(model, sample, m);
  std::vector<double> lp(ld.log_probs.size());
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = std::exp(ld.log_probs[i]);
  detail::z_scores(l_counts, ld.support, lp, reps, rep.l_cells, rep.excluded_cells,
                   rep.max_abs_z);

  auto kl = kl_joint_distribution(model, sample, m);
  std::vector<long long> kl_values;
  std::vector<double> kl_probs;
  for (std::size_t i = 0; i < kl.support.size(); ++i) {
    kl_values.push_back(static_cast<long long>(kl.support[i].first) * (m + 1) +
                        kl.support[i].second);
    kl_probs.push_back(std::exp(kl.log_probs[i]));
  }
  detail::z_scores(kl_counts, kl_values, kl_probs, reps, rep.kl_cells, rep.excluded_cells,
                   rep.max_abs_z);
  return rep;
}

}  // namespace gibbs
