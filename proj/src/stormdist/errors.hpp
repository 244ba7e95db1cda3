// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace stormdist {

/// Caller broke a precondition (dimension mismatch, bad worker id, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Workers or messages out of lockstep: missing, duplicated, wrong round.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters rejected by a validation rule; the message names the rule.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config contained a key outside the schema, or lacked a required one.
class ConfigKeyError : public std::runtime_error {
 public:
  explicit ConfigKeyError(std::string key, bool missing = false)
      : std::runtime_error((missing ? "missing required config key: " : "unknown config key: ") +
                           key),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace stormdist
