#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace impedance {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. `row` is the 1-based data row
/// (header excluded) when the problem is tied to one, 0 otherwise.
class DataError : public Error {
 public:
  enum class Kind { kMissingFile, kMissingColumn, kNonMonotonePhase, kInvalidCell, kTooFewRows, kShape };

  DataError(Kind kind, std::string message, std::size_t row = 0, std::string column = {})
      : Error(std::move(message)), kind_(kind), row_(row), column_(std::move(column)) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::string column_;
};

/// A value violates a documented type invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class QpInfeasible : public Error {
 public:
  QpInfeasible(std::string message, std::vector<std::size_t> constraints)
      : Error(std::move(message)), constraints_(std::move(constraints)) {}

  /// Inequality rows (box bounds appended after the general rows) that
  /// cannot be satisfied together.
  const std::vector<std::size_t>& constraints() const noexcept { return constraints_; }

 private:
  std::vector<std::size_t> constraints_;
};

class QpMaxIterations : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace impedance
