#pragma once

#include <stdexcept>
#include <string>

namespace mcqf {

// Error taxonomy shared by every module. All derive from std::runtime_error
// or std::logic_error so callers can catch broadly at the CLI boundary.

/// Tensor shapes do not fit the operation.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition was violated by the caller.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Invalid or infeasible configuration value.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed input record while reading a data file.
struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A record references an id that does not exist.
struct ReferentialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A dataset split could not be produced.
struct SplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A required trained artifact is missing.
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A stored artifact is incompatible with the loader's expectations.
struct CompatibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A checkpoint file is malformed or truncated.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mcqf
