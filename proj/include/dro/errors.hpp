// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dro {

/// Argument outside the mathematical domain of an operation (negative budget,
/// M > N without replacement, negative φ argument, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value that should satisfy a structural invariant does not (e.g. a
/// vector passed as a pmf that does not sum to one).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative procedure failed to bracket or converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, bad rows, unknown schema columns.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace dro
