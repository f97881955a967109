#pragma once

#include <stdexcept>
#include <string>

namespace hgnn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible array shapes passed to an operation.
struct ShapeError : Error {
  using Error::Error;
};

// Row/column index outside the valid range.
struct IndexError : Error {
  using Error::Error;
};

// Caller violated an operation's contract (e.g. non-scalar loss).
struct ContractError : Error {
  using Error::Error;
};

// Malformed input file (CSV/JSON); message carries file and line.
struct ParseError : Error {
  using Error::Error;
};

// Semantically invalid data (invariant violations, missing references).
struct DataError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

struct TrainError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace hgnn
