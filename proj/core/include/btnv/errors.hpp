#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace btnv {

/// Invalid argument shapes, indices or configuration values.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation that would materialize more entries than allowed.
class SizeLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Non-finite values or a failed factorization inside the solver.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  explicit NumericError(const std::string& what)
      : std::runtime_error(what), iteration_(0) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Malformed CSV input. `line()` is one-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " at line " + std::to_string(line)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Model artifact that cannot be read back (version, shape or size mismatch).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace btnv
