// evmoc - Motion compensation and moving-object tracking for event cameras
// SPDX-License-Identifier: MIT

#ifndef EVMOC_ERROR_HPP
#define EVMOC_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evmoc {

/// Base class for all evmoc errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A non-finite or out-of-domain argument was passed to an operation.
class InvalidArgumentError : public Error {
public:
  explicit InvalidArgumentError(const std::string& what) : Error(what) {}
};

/// An operation that requires data received none (empty slice, empty image).
class EmptyInputError : public Error {
public:
  explicit EmptyInputError(const std::string& what) : Error(what) {}
};

/// A subset handed to per-object model fitting is below the configured floor.
class InsufficientEventsError : public Error {
public:
  explicit InsufficientEventsError(const std::string& what) : Error(what) {}
};

/// Linear-algebra breakdown (e.g. covariance lost positive semi-definiteness).
class NumericalFailureError : public Error {
public:
  explicit NumericalFailureError(const std::string& what) : Error(what) {}
};

/// A synthetic scene description that cannot produce events.
class InvalidSpecError : public Error {
public:
  explicit InvalidSpecError(const std::string& what) : Error(what) {}
};

/// Filesystem-level failure.
class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// Malformed text input; carries the 1-based line number and offending text.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line, std::string text)
      : Error(what + " (line " + std::to_string(line) + ": \"" + text + "\")"),
        line_(line),
        text_(std::move(text)) {}

  std::size_t line() const { return line_; }
  const std::string& text() const { return text_; }

private:
  std::size_t line_;
  std::string text_;
};

} // namespace evmoc

#endif // EVMOC_ERROR_HPP
