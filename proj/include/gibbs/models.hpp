#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gibbs/errors.hpp"
#include "gibbs/gg.hpp"
#include "gibbs/logspace.hpp"

namespace gibbs {

struct Dirichlet {
  double theta;
  explicit Dirichlet(double theta_in) : theta(theta_in) {
    if (!(theta > 0.0)) throw ValidationError("dp: requires theta > 0");
  }
};

struct PoissonDirichlet {
  double sigma;
  double theta;
  PoissonDirichlet(double sigma_in, double theta_in) : sigma(sigma_in), theta(theta_in) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw ValidationError("py: requires sigma in (0,1)");
    if (!(theta > -sigma)) throw ValidationError("py: requires theta > -sigma");
  }
};

struct GeneralizedGamma {
  double sigma;
  double beta;
  std::shared_ptr<GgWeightCache> cache;  // shared across copies so the memo persists
  GeneralizedGamma(double sigma_in, double beta_in, int n_cap = 200)
      : sigma(sigma_in), beta(beta_in),
        cache(std::make_shared<GgWeightCache>(sigma_in, beta_in, n_cap)) {}
};

using GibbsModel = std::variant<Dirichlet, PoissonDirichlet, GeneralizedGamma>;

inline double sigma_of(const GibbsModel& m) {
  return std::visit([](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>)
      return 0.0;
    else
      return f.sigma;
  }, m);
}

// log V_{n,k}. The Dirichlet and Poisson-Dirichlet forms are products, written
// term by term so small sigma stays accurate; the generalized gamma case goes
// through the extended-precision cache.
inline double log_weight(const GibbsModel& m, int n, int k) {
  if (n < 1 || k < 1 || k > n) throw ValidationError("log_weight: need 1 <= k <= n");
  return std::visit([&](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>) {
      return k * std::log(f.theta) - log_rising_factorial(f.theta, n);
    } else if constexpr (std::is_same_v<F, PoissonDirichlet>) {
      double acc = 0.0;
      for (int i = 1; i < k; ++i) acc += std::log(f.theta + i * f.sigma);
      return acc - log_rising_factorial(f.theta + 1.0, n - 1);
    } else {
      return f.cache->log_weight(n, k);
    }
  }, m);
}

struct SampleSummary {
  int n = 0;
  int j = 0;
  std::vector<int> frequencies;       // cluster sizes in input order
  std::map<int, int> multiplicities;  // size level -> number of clusters
};

inline SampleSummary summarize_frequencies(std::vector<int> freq) {
  if (freq.empty()) throw ValidationError("sample: needs at least one cluster");
  SampleSummary s;
  for (int f : freq) {
    if (f < 1) throw ValidationError("sample: frequencies must be >= 1");
    s.n += f;
    ++s.multiplicities[f];
  }
  s.j = static_cast<int>(freq.size());
  s.frequencies = std::move(freq);
  return s;
}

inline SampleSummary summarize_multiplicities(const std::map<int, int>& mult) {
  std::vector<int> freq;
  for (const auto& [level, count] : mult) {
    if (level < 1) throw ValidationError("sample: multiplicity levels must be >= 1");
    if (count < 1) throw ValidationError("sample: multiplicity counts must be >= 1");
    freq.insert(freq.end(), count, level);
  }
  return summarize_frequencies(std::move(freq));
}

// log of the exchangeable partition probability V_{n,k} prod (1-sigma)_{n_i-1}.
inline double eppf_log(const GibbsModel& m, std::span<const int> frequencies) {
  int n = 0;
  for (int f : frequencies) {
    if (f < 1) throw ValidationError("eppf_log: frequencies must be >= 1");
    n += f;
  }
  int k = static_cast<int>(frequencies.size());
  if (k < 1) throw ValidationError("eppf_log: needs at least one cluster");
  double sigma = sigma_of(m);
  double acc = log_weight(m, n, k);
  for (int f : frequencies) acc += log_rising_factorial(1.0 - sigma, f - 1);
  return acc;
}

// log probability of the multiplicity vector (m_1, m_2, ...):
// n! V_{n,k} prod_i [ ((1-sigma)_{i-1} / i!)^{m_i} / m_i! ].
inline double multiplicity_log(const GibbsModel& m, const std::map<int, int>& mult) {
  long long n = 0;
  int k = 0;
  for (const auto& [level, count] : mult) {
    if (level < 1 || count < 1)
      throw ValidationError("multiplicity_log: levels and counts must be >= 1");
    n += static_cast<long long>(level) * count;
    k += count;
  }
  if (k < 1) throw ValidationError("multiplicity_log: needs at least one cluster");
  double sigma = sigma_of(m);
  double acc = log_factorial(n) + log_weight(m, static_cast<int>(n), k);
  for (const auto& [level, count] : mult) {
    acc += count * (log_rising_factorial(1.0 - sigma, level - 1) - log_factorial(level));
    acc -= log_factorial(count);
  }
  return acc;
}

// One-step predictive probability of opening a new cluster after n observations
// in j clusters: V_{n+1,j+1} / V_{n,j}.
inline double new_cluster_prob(const GibbsModel& m, int n, int j) {
  if (n < 1 || j < 1 || j > n) throw ValidationError("new_cluster_prob: need 1 <= j <= n");
  return std::visit([&](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>)
      return f.theta / (f.theta + n);
    else if constexpr (std::is_same_v<F, PoissonDirichlet>)
      return (f.theta + j * f.sigma) / (f.theta + n);
    else
      return std::exp(f.cache->log_weight(n + 1, j + 1) - f.cache->log_weight(n, j));
  }, m);
}

// One-step predictive probability of joining an existing cluster of size n_i:
// (n_i - sigma) V_{n+1,j} / V_{n,j}.
inline double existing_cluster_prob(const GibbsModel& m, int n, int j, int size) {
  if (n < 1 || j < 1 || j > n) throw ValidationError("existing_cluster_prob: need 1 <= j <= n");
  if (size < 1 || size > n) throw ValidationError("existing_cluster_prob: bad cluster size");
  return std::visit([&](const auto& f) -> double {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>)
      return size / (f.theta + n);
    else if constexpr (std::is_same_v<F, PoissonDirichlet>)
      return (size - f.sigma) / (f.theta + n);
    else
      return (size - f.sigma) *
             std::exp(f.cache->log_weight(n + 1, j) - f.cache->log_weight(n, j));
  }, m);
}

// Relative defect of the backward recursion
// V_{n,k} = (n - sigma k) V_{n+1,k} + V_{n+1,k+1}, evaluated in log space.
inline double recursion_residual(const GibbsModel& m, int n, int k) {
  double base = log_weight(m, n, k);
  double sigma = sigma_of(m);
  double t1 = std::log(n - sigma * k) + log_weight(m, n + 1, k) - base;
  double t2 = log_weight(m, n + 1, k + 1) - base;
  return std::abs(1.0 - std::exp(t1) - std::exp(t2));
}

namespace detail {

// Shortest decimal rendering that round-trips the double.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_real(const std::string& text, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !std::isfinite(v))
    throw ValidationError("model grammar: bad numeric value for " + what + ": '" + text + "'");
  return v;
}

}  // namespace detail

// Grammar: dp:theta=<v> | py:sigma=<v>,theta=<v> | gg:sigma=<v>,beta=<v>.
inline GibbsModel parse_model(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ValidationError("model grammar: expected '<family>:<key>=<value>,...', got '" + text + "'");
  std::string family = text.substr(0, colon);
  std::map<std::string, double> kv;
  std::string rest = text.substr(colon + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    size_t comma = rest.find(',', pos);
    std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("model grammar: expected key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    if (kv.count(key)) throw ValidationError("model grammar: duplicate key '" + key + "'");
    kv[key] = detail::parse_real(item.substr(eq + 1), key);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  auto take = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end())
      throw ValidationError("model grammar: family '" + family + "' needs parameter '" + key + "'");
    double v = it->second;
    kv.erase(it);
    return v;
  };
  GibbsModel out = [&]() -> GibbsModel {
    if (family == "dp") return Dirichlet(take("theta"));
    if (family == "py") {
      double sigma = take("sigma");
      return PoissonDirichlet(sigma, take("theta"));
    }
    if (family == "gg") {
      double sigma = take("sigma");
      return GeneralizedGamma(sigma, take("beta"));
    }
    throw ValidationError("model grammar: unknown family '" + family + "'");
  }();
  if (!kv.empty())
    throw ValidationError("model grammar: unexpected parameter '" + kv.begin()->first + "'");
  return out;
}

inline std::string format_model(const GibbsModel& m) {
  using detail::format_double;
  return std::visit([](const auto& f) -> std::string {
    using F = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<F, Dirichlet>)
      return "dp:theta=" + format_double(f.theta);
    else if constexpr (std::is_same_v<F, PoissonDirichlet>)
      return "py:sigma=" + format_double(f.sigma) + ",theta=" + format_double(f.theta);
    else
      return "gg:sigma=" + format_double(f.sigma) + ",beta=" + format_double(f.beta);
  }, m);
}

}  // namespace gibbs
