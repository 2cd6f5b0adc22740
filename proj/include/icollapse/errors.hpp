#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace icollapse {

/// Operator and state shapes do not agree.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation is not defined for this operator or backend.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// <psi|V|psi> vanishes, so the interacting component cannot be projected out.
class DegenerateProjection : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Amplitudes became non-finite during integration.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is missing, unknown, or out of range. `key()` holds
/// the dotted path of the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace icollapse
