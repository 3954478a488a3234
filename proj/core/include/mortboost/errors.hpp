#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mortboost {

/// Input data violates a table invariant or cannot be reconciled with the
/// requested feature space.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the 1-based line number of the offending line.
class ParseError : public DataError {
  public:
    ParseError(std::size_t line, const std::string &what)
        : DataError("line " + std::to_string(line) + ": " + what), line_{line} {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// A feature lies outside the space a table or a fitted model covers.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

} // namespace mortboost
