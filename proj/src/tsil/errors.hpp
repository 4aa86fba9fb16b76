#pragma once

#include <stdexcept>
#include <string>

namespace tsil {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector lengths, action indices or matrix shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A factorization or linear program failed where it should not.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based data row and column name when known.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, long row = -1, std::string column = {})
      : Error(format(what, row, column)), row_(row), column_(std::move(column)) {}

  long row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  static std::string format(const std::string& what, long row,
                            const std::string& column) {
    std::string msg = what;
    if (row >= 0) msg += " (row " + std::to_string(row);
    if (!column.empty()) msg += (row >= 0 ? ", column " : " (column ") + column;
    if (row >= 0 || !column.empty()) msg += ")";
    return msg;
  }

  long row_;
  std::string column_;
};

/// A logged dataset ran out before the requested number of valid steps.
class ExhaustedError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or policy configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsil
