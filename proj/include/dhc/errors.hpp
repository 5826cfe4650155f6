#pragma once

#include <stdexcept>
#include <string>

namespace dhc {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can separate library failures from std::bad_alloc and friends.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};
struct InvalidArgument : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
// Least-squares problem without enough independent data.
struct RankError : NumericError {
  using NumericError::NumericError;
};
struct RangeError : Error {
  using Error::Error;
};
struct ConvergenceError : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};
struct ProtocolError : Error {
  using Error::Error;
};
struct SelectionError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
// Bad user configuration: unknown keys, malformed values. Maps to CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dhc
