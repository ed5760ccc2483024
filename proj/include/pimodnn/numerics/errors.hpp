#pragma once

#include <stdexcept>
#include <string>

namespace pimodnn {

/// Operand shapes do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller supplied invalid data (short series, bad config value, missing file).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API precondition was violated by the calling code itself.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A loss or state became non-finite.
class NumericalDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pimodnn
