#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sigp {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not agree, or a matrix that should be square/symmetric and is not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument outside its mathematical domain (negative variance, p > 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible or positive definite is not.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Requested rank exceeds what the data supports.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t detected_rank)
      : Error(what), detected_rank_(detected_rank) {}
  std::size_t detected_rank() const noexcept { return detected_rank_; }

 private:
  std::size_t detected_rank_;
};

/// Malformed input files. `line()` is 1-based, 0 when not tied to a line.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sigp
