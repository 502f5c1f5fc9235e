#pragma once

#include <stdexcept>
#include <string>

namespace agsfh {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable, or malformed files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Violated preconditions: shape mismatches, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed factorizations, eigen solver breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace agsfh
