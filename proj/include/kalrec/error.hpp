#pragma once

#include <stdexcept>
#include <string>

namespace kalrec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated precondition, malformed file, unknown label.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside the filter (singular innovation covariance,
/// non-finite values, covariance that lost positive semi-definiteness).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Cosine distance requested for a vector with zero norm.
class UndefinedDistanceError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detail
}  // namespace kalrec
