#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "gibbs/distribution.hpp"
#include "gibbs/logspace.hpp"

using namespace gibbs;

namespace {

DiscreteDistribution binomial_dist(int n, double p) {
  DiscreteDistribution d;
  for (int k = 0; k <= n; ++k) {
    d.support.push_back(k);
    d.log_probs.push_back(log_binomial(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
  }
  return d;
}

HPDInterval brute_hpd(const DiscreteDistribution& d, double level) {
  size_t m = d.support.size();
  HPDInterval best;
  long long best_len = -1;
  for (size_t lo = 0; lo < m; ++lo) {
    double mass = 0.0;
    for (size_t hi = lo; hi < m; ++hi) {
      mass += std::exp(d.log_probs[hi]);
      if (mass >= level) {
        long long len = d.support[hi] - d.support[lo];
        if (best_len < 0 || len < best_len) {
          best = {d.support[lo], d.support[hi], mass};
          best_len = len;
        }
        break;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("moments of a binomial reference") {
  auto d = binomial_dist(20, 0.3);
  CHECK_THAT(d.total_log_mass(), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(d.mean(), Catch::Matchers::WithinRel(6.0, 1e-12));
  CHECK_THAT(d.variance(), Catch::Matchers::WithinRel(4.2, 1e-12));
  CHECK_THAT(d.prob(6), Catch::Matchers::WithinRel(0.19163898275344238, 1e-12));
  CHECK(d.log_prob(21) == kNegInf);
  CHECK(d.log_prob(-1) == kNegInf);
}

TEST_CASE("hpd matches brute force on assorted shapes") {
  for (double p : {0.1, 0.3, 0.5, 0.62}) {
    for (double level : {0.5, 0.8, 0.95, 0.99}) {
      auto d = binomial_dist(40, p);
      auto got = hpd_interval(d, level);
      auto want = brute_hpd(d, level);
      INFO("p=" << p << " level=" << level);
      CHECK(got.lower == want.lower);
      CHECK(got.upper == want.upper);
      CHECK_THAT(got.attained_mass, Catch::Matchers::WithinAbs(want.attained_mass, 1e-12));
      CHECK(got.attained_mass >= level);
    }
  }
}

TEST_CASE("hpd tie-break prefers the smaller lower endpoint") {
  DiscreteDistribution d;
  d.support = {0, 1, 2};
  d.log_probs = {std::log(0.4), std::log(0.2), std::log(0.4)};
  auto iv = hpd_interval(d, 0.5);
  CHECK(iv.lower == 0);
  CHECK(iv.upper == 1);
  CHECK_THAT(iv.attained_mass, Catch::Matchers::WithinAbs(0.6, 1e-12));
}

TEST_CASE("hpd on a near-point mass") {
  DiscreteDistribution d;
  d.support = {4, 5, 6};
  d.log_probs = {std::log(0.01), std::log(0.98), std::log(0.01)};
  auto iv = hpd_interval(d, 0.95);
  CHECK(iv.lower == 5);
  CHECK(iv.upper == 5);
}

TEST_CASE("hpd validates its inputs") {
  auto d = binomial_dist(5, 0.4);
  CHECK_THROWS_AS(hpd_interval(d, 0.0), ValidationError);
  CHECK_THROWS_AS(hpd_interval(d, 1.0), ValidationError);

  DiscreteDistribution bad = d;
  bad.log_probs.pop_back();
  CHECK_THROWS_AS(hpd_interval(bad, 0.5), ValidationError);

  DiscreteDistribution unsorted = d;
  std::swap(unsorted.support[0], unsorted.support[1]);
  CHECK_THROWS_AS(hpd_interval(unsorted, 0.5), ValidationError);

  DiscreteDistribution short_mass = d;
  for (auto& lp : short_mass.log_probs) lp -= std::log(2.0);
  CHECK_THROWS_AS(hpd_interval(short_mass, 0.5), NumericRangeError);
}

TEST_CASE("csv dump format") {
  DiscreteDistribution d;
  d.support = {0, 1};
  d.log_probs = {std::log(0.25), std::log(0.75)};
  std::ostringstream os;
  write_csv(os, d);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "value,log_prob,prob");
  std::getline(is, line);
  CHECK(line.substr(0, 2) == "0,");
  CHECK(line.find("0.25") != std::string::npos);
  std::getline(is, line);
  CHECK(line.substr(0, 2) == "1,");
  CHECK(line.find("0.75") != std::string::npos);
}
