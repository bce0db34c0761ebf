#pragma once

#include <stdexcept>
#include <string>

namespace gibbs {

// Malformed input: bad parameters, inconsistent samples, parse failures.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Computation left the supported numeric regime: table caps exceeded, precision
// exhausted, argument outside the positive domain. The CLI maps this to exit code 3.
class NumericRangeError : public std::runtime_error {
 public:
  explicit NumericRangeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gibbs
