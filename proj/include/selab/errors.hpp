#pragma once

#include <stdexcept>
#include <string>

namespace selab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed config, invalid mesh/problem parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tridiagonal elimination hit a vanishing pivot.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// An iterative method exhausted its iteration budget.
class IterationLimit : public Error {
 public:
  using Error::Error;
};

/// Monotone iteration left the [sub, super] interval, or sub > super.
class OrderViolation : public Error {
 public:
  using Error::Error;
};

/// bracket_threshold endpoints do not classify as (solvable, unsolvable).
class BadInitialBracket : public Error {
 public:
  using Error::Error;
};

/// Rate-fit window holds fewer than the minimum node count.
class WindowTooSparse : public Error {
 public:
  using Error::Error;
};

/// Shooting counts along the fold scan violate the single-fold pattern.
class FoldNotResolved : public Error {
 public:
  using Error::Error;
};

}  // namespace selab
