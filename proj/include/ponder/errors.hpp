#pragma once

#include <stdexcept>
#include <string>

namespace ponder {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/length mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// API misuse (non-scalar loss, empty input, ...).
struct UsageError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

// Malformed task input.
struct InputError : Error {
  using Error::Error;
};

// Filesystem/stream failure in the harness.
struct IoError : Error {
  using Error::Error;
};

}  // namespace ponder
