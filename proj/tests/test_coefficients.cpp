#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "gibbs/coefficients.hpp"

using namespace gibbs;

namespace {

// Alternating-sum definition of the (non)central generalized factorial
// coefficient; numerically safe only for small n, which is exactly the oracle
// regime it serves here.
double brute_coeff(int n, int k, double sigma, double gamma = 0.0) {
  double sum = 0.0;
  for (int i = 0; i <= k; ++i) {
    double prod = 1.0;
    for (int t = 0; t < n; ++t) prod *= (-static_cast<double>(i) * sigma - gamma + t);
    sum += ((i % 2) ? -1.0 : 1.0) * std::exp(log_binomial(k, i)) * prod;
  }
  return sum / std::exp(log_factorial(k));
}

}  // namespace

TEST_CASE("central coefficients match the alternating-sum definition") {
  for (double sigma : {0.3, 0.612}) {
    CoeffTable t(sigma, 8);
    for (int n = 1; n <= 8; ++n) {
      for (int k = 1; k <= n; ++k) {
        double ref = brute_coeff(n, k, sigma);
        CHECK_THAT(std::exp(t.log_coeff(n, k)), Catch::Matchers::WithinRel(ref, 1e-10));
      }
    }
  }
}

TEST_CASE("sigma=0 rows are signless Stirling numbers") {
  CoeffTable t(0.0, 6);
  std::vector<double> row5{0, 24, 50, 35, 10, 1};
  for (int k = 1; k <= 5; ++k)
    CHECK_THAT(std::exp(t.log_scaled(5, k)), Catch::Matchers::WithinRel(row5[k], 1e-12));
  CHECK(t.log_scaled(5, 0) == kNegInf);
  CHECK(t.log_scaled(0, 0) == 0.0);
  for (int n = 0; n <= 6; ++n)
    for (int k = 0; k <= n; ++k)
      CHECK(log_signless_stirling(n, k) == t.log_scaled(n, k));
  // Unscaled central coefficients vanish identically at sigma = 0.
  CHECK(t.log_coeff(5, 2) == kNegInf);
}

TEST_CASE("generating identity certifies deep rows") {
  // sum_k C(n,k;sigma) (t)_k = (sigma t)_n, in scaled form
  // sum_k D(n,k) sigma^k (t)_k with D = C / sigma^k.
  int n = 200;
  for (double sigma : {0.34, 0.612}) {
    CoeffTable tab(sigma, n);
    for (double t : {0.7, 3.456}) {
      std::vector<double> terms;
      for (int k = 1; k <= n; ++k)
        terms.push_back(tab.log_scaled(n, k) + k * std::log(sigma) +
                        log_rising_factorial(t, k));
      double lhs = log_sum_exp(terms);
      double rhs = log_rising_factorial(sigma * t, n);
      CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-10));
    }
  }
}

TEST_CASE("streamed row equals the materialized row") {
  CoeffTable t(0.34, 60);
  auto row = scaled_coeff_row(0.34, 60);
  REQUIRE(row.size() == 61);
  for (int k = 0; k <= 60; ++k) CHECK(row[k] == t.log_scaled(60, k));
}

TEST_CASE("noncentral coefficients match the alternating-sum definition") {
  double gamma = -2.5;
  for (double sigma : {0.45, 0.8}) {
    for (int n = 1; n <= 7; ++n) {
      auto row = noncentral_scaled_row(sigma, n, gamma);
      for (int k = 0; k <= n; ++k) {
        double ref = brute_coeff(n, k, sigma, gamma);
        double got = std::exp(row[k] + k * std::log(sigma));
        CHECK_THAT(got, Catch::Matchers::WithinRel(ref, 1e-9));
        CHECK_THAT(std::exp(log_noncentral_coeff(n, k, sigma, gamma)),
                   Catch::Matchers::WithinRel(ref, 1e-9));
      }
    }
  }
}

TEST_CASE("noncentral coefficients require -gamma > 0") {
  CHECK_THROWS_AS(noncentral_scaled_row(0.5, 4, 0.0), NumericRangeError);
  CHECK_THROWS_AS(log_noncentral_coeff(4, 2, 0.5, 1.5), NumericRangeError);
}

TEST_CASE("table cap and its environment override") {
  ::unsetenv("GIBBS_TABLE_CAP");
  CHECK(table_cap() == 4000);
  CHECK(stream_cap() == 10000);
  CHECK_THROWS_AS(CoeffTable(0.5, 4001), NumericRangeError);

  ::setenv("GIBBS_TABLE_CAP", "50", 1);
  CHECK(table_cap() == 50);
  CHECK(stream_cap() == 10000);
  CHECK_THROWS_AS(CoeffTable(0.5, 51), NumericRangeError);
  CHECK_NOTHROW(CoeffTable(0.5, 50));

  ::setenv("GIBBS_TABLE_CAP", "20000", 1);
  CHECK(table_cap() == 20000);
  CHECK(stream_cap() == 20000);

  ::setenv("GIBBS_TABLE_CAP", "garbage", 1);
  CHECK(table_cap() == 4000);
  ::unsetenv("GIBBS_TABLE_CAP");
}

TEST_CASE("summation identity holds on small grids") {
  {
    std::vector<double> a{0.7};
    std::vector<int> n{2};
    for (int q : {0, 1, 3, 6}) {
      auto [lhs, rhs] = chu_vandermonde_sides(a, n, q);
      CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-10));
    }
  }
  {
    std::vector<double> a{0.7, 1.3};
    std::vector<int> n{2, 1};
    for (int q : {1, 4, 7}) {
      auto [lhs, rhs] = chu_vandermonde_sides(a, n, q);
      CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-10));
    }
  }
  {
    std::vector<double> a{0.5, 0.5, 2.0};
    std::vector<int> n{3, 1, 2};
    auto [lhs, rhs] = chu_vandermonde_sides(a, n, 5);
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-10));
  }
}

TEST_CASE("summation identity guards the composition count") {
  std::vector<double> a(30, 0.5);
  std::vector<int> n(30, 1);
  CHECK_THROWS_AS(chu_vandermonde_sides(a, n, 30), NumericRangeError);
}
