#pragma once

#include <stdexcept>
#include <string>

namespace mgdde {

/// Bad input: malformed config, schema violation, invalid graph or network.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ValidationCode {
  SelfLoop,
  ZeroInDegree,
  VertexOutOfRange,
  DuplicateEdge,
  BadValue,
};

class ValidationError : public ConfigError {
 public:
  ValidationError(ValidationCode code, const std::string& what)
      : ConfigError(what), code_(code) {}
  ValidationCode code() const { return code_; }

 private:
  ValidationCode code_;
};

/// Numerical failure: non-convergence, singular network, step-size underflow.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mgdde
