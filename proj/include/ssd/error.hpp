#pragma once

#include <stdexcept>
#include <string>

namespace ssd {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The channel matrix has no unique triangularization.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// An exact count does not fit the widest supported integer.
class Overflow : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured cap.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// Malformed user input (instance files, configs).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssd
