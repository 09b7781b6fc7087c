#pragma once

#include <stdexcept>
#include <string>

namespace segreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad flag values, B = 0, dimension mismatch).
/// The CLI maps these to exit code 1.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Problems with the data itself. The CLI maps these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : DataError(what + " (row " + std::to_string(row) + ", column " +
                  std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// Normal equations rank-deficient beyond tolerance.
class SingularDesign : public DataError {
 public:
  using DataError::DataError;
};

/// No candidate threshold survives trimming and the regime-count filter.
class EmptyGrid : public DataError {
 public:
  using DataError::DataError;
};

/// Unconstrained SSR is zero, so the quasi-LR statistic is undefined.
class DegenerateFit : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace segreg
