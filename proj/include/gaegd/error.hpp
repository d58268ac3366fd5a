#pragma once

#include <stdexcept>
#include <string>

namespace gaegd {

/// Argument outside the mathematical domain of a map (s <= 0, y outside range).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested operation is not defined for this energy function,
/// e.g. inverting the constant derivative of Power(1).
class UnsupportedEnergyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration: bad shift c, unknown names, inadmissible energy.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gaegd
