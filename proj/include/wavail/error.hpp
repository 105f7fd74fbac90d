#pragma once

#include <stdexcept>
#include <string>

namespace wavail {

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Pathloss evaluated at zero distance.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// SIR requested for a deployment without interferers.
class NoInterferenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine could not reach its requested accuracy
/// (e.g. the uniformization tail bound stayed above tolerance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration rejected; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace wavail
