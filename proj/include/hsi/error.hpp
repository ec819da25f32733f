#pragma once

#include <stdexcept>
#include <string>

namespace hsi {

// Base of every error the library throws. The CLI maps each subclass to a
// distinct exit code (see tools/hsi_main.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidState : public Error { using Error::Error; };
class InvalidDelta : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class UnsupportedQuery : public Error { using Error::Error; };
class ResourceError : public Error { using Error::Error; };
class GraphError : public Error { using Error::Error; };
class PlanningError : public Error { using Error::Error; };
class UnsupportedAction : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class GeneratorError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

// Remote agent failures. The three kinds are kept distinct so callers can tell
// a dead endpoint from a malformed or geometrically invalid answer.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string payload)
      : Error(what), payload_(std::move(payload)) {}
  const std::string& payload() const { return payload_; }

 private:
  std::string payload_;
};
class TransportError : public BackendError { using BackendError::BackendError; };
class SchemaError : public BackendError { using BackendError::BackendError; };
class ValidationError : public BackendError { using BackendError::BackendError; };

}  // namespace hsi
