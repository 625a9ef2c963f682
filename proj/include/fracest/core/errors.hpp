#pragma once

#include <stdexcept>
#include <string>

namespace fracest {

// Every error thrown by the library derives from Error so callers (the CLI in
// particular) can map categories onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parameter or argument outside its admissible domain.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Numerical failure: embedding, divergence, non-finite values.
class NumericalError : public Error {
public:
  using Error::Error;
};

class EmbeddingError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Input carries no information for the requested computation
/// (constant path, zero variance).
class DegenerateInputError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
public:
  using Error::Error;
};

class CorruptFileError : public IoError {
public:
  using IoError::IoError;
};

class VersionMismatchError : public IoError {
public:
  using IoError::IoError;
};

/// Parse failure with a 1-based row/column location.
class ParseError : public IoError {
public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : IoError(what + " (row " + std::to_string(row) + ", column " +
                std::to_string(column) + ")"),
        row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace fracest
