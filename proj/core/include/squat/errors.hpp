#pragma once

#include <stdexcept>
#include <string>

namespace squat {

// Error taxonomy mirrored by the CLI exit codes: usage/config -> 1,
// data/serialization -> 2, numerical failure -> 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated internal precondition (caller bug), e.g. shape mismatches or an
// empty attention key set. Deliberately not caught by the CLI dispatcher.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DimensionError : ContractError {
  using ContractError::ContractError;
};

}  // namespace squat
