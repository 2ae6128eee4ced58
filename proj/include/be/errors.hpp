#pragma once

#include <stdexcept>
#include <string>

namespace be {

// Exit codes used by the CLI. Library code throws; the CLI maps to these.
enum class ExitCode : int {
  ok = 0,
  config_error = 2,
  contract_violation = 3,
  resource_exceeded = 4,
};

// Invalid input to an operation (bad state id, non-finite vector, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A component broke its contract at runtime (invalid action from a sampler,
// trajectory failing validation, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// An enumeration or trial budget was exceeded.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Bad or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace be
