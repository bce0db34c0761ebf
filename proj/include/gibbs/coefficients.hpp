#pragma once

#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "gibbs/errors.hpp"
#include "gibbs/logspace.hpp"

namespace gibbs {

// Materialized-table cap; GIBBS_TABLE_CAP overrides it. Read on every call so a
// changed environment takes effect without process restart.
inline int table_cap() {
  if (const char* env = std::getenv("GIBBS_TABLE_CAP")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v < 2000000000L) return static_cast<int>(v);
  }
  return 4000;
}

// Row-streaming ops tolerate larger n than a full triangle.
inline int stream_cap() { return std::max(10000, table_cap()); }

namespace detail {

// Advance the scaled-coefficient row d from order n to order n+1 in place:
// d'(k) = (n - k*sigma) d(k) + d(k-1). All coefficients are nonnegative, so the
// recurrence never cancels. Row n has entries k = 0..n; d must have room for n+1.
inline void advance_scaled_row(std::vector<double>& d, int n, double sigma) {
  d.push_back(kNegInf);
  for (int k = n + 1; k >= 1; --k) {
    double c = static_cast<double>(n) - static_cast<double>(k) * sigma;
    double t1 = (c > 0.0 && d[k] != kNegInf) ? std::log(c) + d[k] : kNegInf;
    d[k] = log_add(t1, d[k - 1]);
  }
  d[0] = kNegInf;  // only the empty partition has zero blocks
}

}  // namespace detail

// Triangle of log[C(n,k;sigma)/sigma^k] for 0 <= k <= n <= max_n. Scaling by
// sigma^-k keeps every entry finite as sigma -> 0, where the values become the
// signless Stirling numbers of the first kind.
class CoeffTable {
 public:
  CoeffTable(double sigma, int max_n) : sigma_(sigma), max_n_(max_n) {
    if (!(sigma >= 0.0 && sigma < 1.0))
      throw ValidationError("CoeffTable: sigma must lie in [0,1), got " + std::to_string(sigma));
    if (max_n < 0) throw ValidationError("CoeffTable: max_n must be nonnegative");
    if (max_n > table_cap())
      throw NumericRangeError("CoeffTable: max_n=" + std::to_string(max_n) +
                              " exceeds table cap " + std::to_string(table_cap()) +
                              " (set GIBBS_TABLE_CAP to raise it)");
    tri_.reserve(static_cast<size_t>(max_n + 1) * (max_n + 2) / 2);
    std::vector<double> row{0.0};  // D(0,0) = 1
    tri_.insert(tri_.end(), row.begin(), row.end());
    for (int n = 0; n < max_n; ++n) {
      detail::advance_scaled_row(row, n, sigma_);
      tri_.insert(tri_.end(), row.begin(), row.end());
    }
  }

  double sigma() const { return sigma_; }
  int max_n() const { return max_n_; }

  // log[C(n,k;sigma)/sigma^k]; -inf where the coefficient vanishes.
  double log_scaled(int n, int k) const {
    check(n, k);
    return tri_[static_cast<size_t>(n) * (n + 1) / 2 + k];
  }

  // log C(n,k;sigma); identically -inf for sigma = 0 and k >= 1.
  double log_coeff(int n, int k) const {
    double base = log_scaled(n, k);
    if (k == 0) return base;
    if (sigma_ == 0.0) return kNegInf;
    return base + static_cast<double>(k) * std::log(sigma_);
  }

 private:
  void check(int n, int k) const {
    if (n < 0 || n > max_n_ || k < 0 || k > n)
      throw ValidationError("CoeffTable: index (" + std::to_string(n) + "," +
                            std::to_string(k) + ") outside triangle of order " +
                            std::to_string(max_n_));
  }
  double sigma_;
  int max_n_;
  std::vector<double> tri_;
};

inline CoeffTable build_coeff_table(double sigma, int max_n) { return CoeffTable(sigma, max_n); }

// Single row n of log[C(n,k;sigma)/sigma^k], k = 0..n, built with two-row
// streaming so it works beyond the materialized-table cap.
inline std::vector<double> scaled_coeff_row(double sigma, int n) {
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw ValidationError("scaled_coeff_row: sigma must lie in [0,1)");
  if (n < 0) throw ValidationError("scaled_coeff_row: n must be nonnegative");
  if (n > stream_cap())
    throw NumericRangeError("scaled_coeff_row: n=" + std::to_string(n) +
                            " exceeds streaming cap " + std::to_string(stream_cap()));
  std::vector<double> row{0.0};
  for (int m = 0; m < n; ++m) detail::advance_scaled_row(row, m, sigma);
  return row;
}

// log |s(n,k)|, the sigma -> 0 limit of the scaled coefficients.
inline double log_signless_stirling(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw ValidationError("log_signless_stirling: need 0 <= k <= n");
  return scaled_coeff_row(0.0, n)[k];
}

// Row of log[C(n,k;sigma,gamma)/sigma^k] for k = 0..n, via the binomial
// expansion over central coefficients. Requires -gamma > 0, which makes every
// term positive; (-gamma)_t factors are accumulated incrementally.
inline std::vector<double> noncentral_scaled_row(double sigma, int n, double gamma) {
  if (!(-gamma > 0.0))
    throw NumericRangeError("noncentral coefficients need -gamma > 0, got gamma=" +
                            std::to_string(gamma));
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw ValidationError("noncentral_scaled_row: sigma must lie in [0,1)");
  if (n < 0) throw ValidationError("noncentral_scaled_row: n must be nonnegative");
  if (n > stream_cap())
    throw NumericRangeError("noncentral_scaled_row: n exceeds streaming cap");

  std::vector<double> lrf_neg_gamma(n + 1);  // log (-gamma)_t
  lrf_neg_gamma[0] = 0.0;
  for (int t = 1; t <= n; ++t)
    lrf_neg_gamma[t] = lrf_neg_gamma[t - 1] + std::log(-gamma + static_cast<double>(t - 1));

  std::vector<double> acc(n + 1, kNegInf);
  std::vector<double> row{0.0};
  for (int s = 0;; ++s) {
    double lb = log_binomial(n, s);
    for (int k = 0; k <= s; ++k) {
      if (row[k] == kNegInf) continue;
      acc[k] = log_add(acc[k], lb + row[k] + lrf_neg_gamma[n - s]);
    }
    if (s == n) break;
    detail::advance_scaled_row(row, s, sigma);
  }
  return acc;
}

inline double log_noncentral_scaled(int n, int k, double sigma, double gamma) {
  if (k < 0 || k > n) throw ValidationError("log_noncentral_scaled: need 0 <= k <= n");
  return noncentral_scaled_row(sigma, n, gamma)[k];
}

// log C(n,k;sigma,gamma) itself; needs sigma > 0 for k >= 1.
inline double log_noncentral_coeff(int n, int k, double sigma, double gamma) {
  double base = log_noncentral_scaled(n, k, sigma, gamma);
  if (k == 0) return base;
  if (sigma == 0.0) return kNegInf;
  return base + static_cast<double>(k) * std::log(sigma);
}

// Both sides of the summation identity
//   sum_{q_1+...+q_j=q} (q! / prod q_i!) prod (a_i)_{n_i+q_i-1}
//     = (n - j + sum a_i)_q * prod (a_i)_{n_i-1},      n = sum n_i,
// returned as logs. The left side enumerates weak compositions of q; the count
// binom(q+j-1, j-1) is bounded to keep the enumeration tractable.
inline std::pair<double, double> chu_vandermonde_sides(std::span<const double> a,
                                                       std::span<const int> ni, int q) {
  size_t j = a.size();
  if (j == 0 || ni.size() != j) throw ValidationError("chu_vandermonde_sides: size mismatch");
  if (q < 0) throw ValidationError("chu_vandermonde_sides: q must be nonnegative");
  long long n = 0;
  double a_sum = 0.0;
  for (size_t i = 0; i < j; ++i) {
    if (ni[i] < 1) throw ValidationError("chu_vandermonde_sides: block sizes must be >= 1");
    if (!(a[i] > 0.0)) throw ValidationError("chu_vandermonde_sides: a_i must be positive");
    n += ni[i];
    a_sum += a[i];
  }
  double comp_count = std::exp(log_binomial(q + static_cast<long long>(j) - 1,
                                            static_cast<long long>(j) - 1));
  if (comp_count > 1e7)
    throw NumericRangeError("chu_vandermonde_sides: composition count exceeds 1e7");

  double lhs = kNegInf;
  std::vector<int> qi(j, 0);
  double lq_fact = log_factorial(q);
  // Depth-first over weak compositions (q_1, ..., q_j) of q.
  auto recurse = [&](auto&& self, size_t idx, int rem, double partial) -> void {
    if (idx + 1 == j) {
      double term = partial + lq_fact - log_factorial(rem) +
                    log_rising_factorial(a[idx], ni[idx] + rem - 1);
      lhs = log_add(lhs, term);
      return;
    }
    for (int t = 0; t <= rem; ++t) {
      double add = -log_factorial(t) + log_rising_factorial(a[idx], ni[idx] + t - 1);
      self(self, idx + 1, rem - t, partial + add);
    }
  };
  recurse(recurse, 0, q, 0.0);

  double rhs = log_rising_factorial(static_cast<double>(n - static_cast<long long>(j)) + a_sum, q);
  for (size_t i = 0; i < j; ++i) rhs += log_rising_factorial(a[i], ni[i] - 1);
  return {lhs, rhs};
}

}  // namespace gibbs
