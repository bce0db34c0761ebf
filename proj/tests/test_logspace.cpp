#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gibbs/logspace.hpp"

using namespace gibbs;

TEST_CASE("log_rising_factorial pinned values") {
  CHECK(log_rising_factorial(5.0, 0) == 0.0);
  CHECK_THAT(log_rising_factorial(2.0, 3), Catch::Matchers::WithinRel(std::log(24.0), 1e-14));
  CHECK_THAT(log_rising_factorial(0.5, 2), Catch::Matchers::WithinRel(std::log(0.75), 1e-14));
}

TEST_CASE("log_rising_factorial rejects non-positive base") {
  CHECK_THROWS_AS(log_rising_factorial(0.0, 3), NumericRangeError);
  CHECK_THROWS_AS(log_rising_factorial(-1.5, 2), NumericRangeError);
}

TEST_CASE("log_rising_factorial agrees across the strategy switch") {
  // n=32 uses the direct product, n=33 the lgamma difference; both must agree
  // with a reference product to high relative accuracy.
  for (double x : {0.25, 0.66, 2.5, 33.0, 741.33}) {
    for (long long n : {31LL, 32LL, 33LL, 34LL, 100LL}) {
      double ref = 0.0;
      for (long long i = 0; i < n; ++i) ref += std::log(x + double(i));
      CHECK_THAT(log_rising_factorial(x, n), Catch::Matchers::WithinRel(ref, 1e-12));
    }
  }
}

TEST_CASE("log_rising_factorial additivity") {
  // (x)_{a+b} = (x)_a * (x+a)_b
  double x = 0.388;
  for (long long a : {0LL, 3LL, 17LL, 40LL}) {
    for (long long b : {0LL, 5LL, 29LL, 64LL}) {
      double lhs = log_rising_factorial(x, a + b);
      double rhs = log_rising_factorial(x, a) + log_rising_factorial(x + double(a), b);
      CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-10));
    }
  }
}

TEST_CASE("log_add and log_sum_exp") {
  CHECK_THAT(log_add(std::log(0.3), std::log(0.7)), Catch::Matchers::WithinAbs(0.0, 1e-14));
  CHECK(log_add(kNegInf, kNegInf) == kNegInf);
  CHECK_THAT(log_add(kNegInf, 1.25), Catch::Matchers::WithinAbs(1.25, 1e-14));

  std::vector<double> xs{std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)};
  CHECK_THAT(log_sum_exp(xs), Catch::Matchers::WithinAbs(0.0, 1e-14));

  std::vector<double> wide{-1000.0, -1001.0, kNegInf};
  double expect = -1000.0 + std::log1p(std::exp(-1.0));
  CHECK_THAT(log_sum_exp(wide), Catch::Matchers::WithinRel(expect, 1e-14));

  std::vector<double> empty;
  CHECK(log_sum_exp(empty) == kNegInf);
}

TEST_CASE("log_binomial matches Pascal's triangle") {
  std::vector<std::vector<double>> pascal(21);
  for (int n = 0; n <= 20; ++n) {
    pascal[n].assign(n + 1, 1.0);
    for (int k = 1; k < n; ++k) pascal[n][k] = pascal[n - 1][k - 1] + pascal[n - 1][k];
  }
  for (int n = 0; n <= 20; ++n)
    for (int k = 0; k <= n; ++k)
      CHECK_THAT(std::exp(log_binomial(n, k)), Catch::Matchers::WithinRel(pascal[n][k], 1e-12));
  CHECK_THROWS_AS(log_binomial(3, 4), NumericRangeError);
}

TEST_CASE("log_factorial pinned values") {
  CHECK(log_factorial(0) == 0.0);
  CHECK_THAT(log_factorial(5), Catch::Matchers::WithinRel(std::log(120.0), 1e-14));
  CHECK_THAT(log_factorial(20), Catch::Matchers::WithinRel(std::log(2432902008176640000.0), 1e-12));
}
