#pragma once

#include <stdexcept>
#include <string>

namespace cssm {

/// Argument outside the mathematical domain of an operation (tau out of
/// range, non-finite input, non-positive Box-Cox argument, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative numerical routine failed to converge.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Index (margin, time point, horizon) outside the valid range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid user configuration, detected before any computation runs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file; the message carries row/column coordinates.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what + " at row " + std::to_string(row) + ", column " +
                           std::to_string(column)),
        message_(what),
        row_(row),
        column_(column) {}
  /// The message without the coordinates.
  const std::string& message() const noexcept { return message_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string message_;
  std::size_t row_;
  std::size_t column_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regression design problems (rank deficiency, too few observations).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The sampler could not find a point with finite log density and gradient.
class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Predictions or scores are missing for cells that must be covered.
class CompletenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cssm
