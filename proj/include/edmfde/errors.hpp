#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edmfde {

/// Base class for every error raised by the library.
class FdeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix handed to a kernel is not symmetric or has non-finite entries.
class InvalidMatrix : public FdeError {
 public:
  using FdeError::FdeError;
};

/// Normal matrix is rank deficient (condition estimate above 1e12).
class SingularGeometry : public FdeError {
 public:
  using FdeError::FdeError;
};

class TooFewMeasurements : public FdeError {
 public:
  using FdeError::FdeError;
};

class InsufficientDimension : public FdeError {
 public:
  using FdeError::FdeError;
};

/// Solution separation would enumerate more subsets than its budget allows.
class BudgetExceeded : public FdeError {
 public:
  using FdeError::FdeError;
};

/// ROC rate with an empty denominator (no faulty or no fault-free samples).
class UndefinedRate : public FdeError {
 public:
  using FdeError::FdeError;
};

class ParseError : public FdeError {
 public:
  ParseError(const std::string& what, std::size_t row)
      : FdeError(what), row_(row) {}
  /// 1-based line number in the source file, 0 when not tied to a line.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace edmfde
