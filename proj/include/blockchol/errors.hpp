#pragma once

#include <stdexcept>
#include <string>

namespace blockchol {

/// Malformed arguments: shape mismatches, non-finite values, bad partitions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Cholesky pivot was <= 0 where a positive definite matrix was required.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blockchol
