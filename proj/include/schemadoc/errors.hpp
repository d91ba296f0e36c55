#pragma once

#include <stdexcept>
#include <string>

namespace schemadoc {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string &what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what) : Error(what) {}
};

class AnalyzerError : public Error {
 public:
  explicit AnalyzerError(const std::string &what) : Error(what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string &what) : Error(what) {}
};

// Raised when a guardrail pre-check denies the next analyzer call.
class GuardrailStop : public Error {
 public:
  GuardrailStop(const std::string &what, std::string phase, std::string kind)
      : Error(what), phase(std::move(phase)), kind(std::move(kind)) {}
  std::string phase;
  std::string kind;
};

}  // namespace schemadoc
