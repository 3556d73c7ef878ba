#pragma once

#include <stdexcept>
#include <string>

namespace hgsc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Domain error or missing variable while evaluating an expression.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Invalid input to a pencil solver (shape, symmetry, definiteness).
class PencilError : public Error {
 public:
  using Error::Error;
};

/// A standing assumption on the system failed on the sampling grid.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

/// A Lyapunov certificate or a design-freedom certificate failed.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// Closed-loop integration failed (non-finite state, iteration cap).
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration file content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hgsc
