#pragma once

#include <stdexcept>
#include <string>

namespace bwlab {

// Base for every error raised by the library. Each subclass maps to one
// failure category that the CLI turns into an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed a value outside an operation's domain (negative order,
// negative demand, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// A model parameter violates its invariant (smoothing outside (0,1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Internal state is malformed, e.g. a pipeline entry is due in the past.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class InsufficientSampleError : public Error {
 public:
  using Error::Error;
};

// A remote agent answered with something that is not a valid order.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

// Retries and fallback for a remote agent were exhausted.
class RemoteBudgetExceeded : public Error {
 public:
  using Error::Error;
};

// Invalid scenario / training configuration. `line` is 1-based, 0 when the
// location is unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace bwlab
