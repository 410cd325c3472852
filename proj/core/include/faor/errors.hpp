#pragma once

#include <stdexcept>
#include <string>

namespace faor {

// Malformed or out-of-contract input: bad dimensions, unreadable files,
// invalid configuration. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A NaN or Inf surfaced in a computation. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace faor
