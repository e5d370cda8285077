#pragma once

#include <stdexcept>
#include <string>

namespace dpem {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad file contents, invalid arguments, broken invariants
/// of a user-supplied value.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A partition into the requested number of blocks does not exist.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A block of a partition has zero total weight.
class InvalidPartitionError : public InputError {
 public:
  using InputError::InputError;
};

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInput = 2,
  kInfeasible = 3,
  kDivergence = 4,
};

}  // namespace dpem
