#pragma once

#include <stdexcept>
#include <string>

namespace cantor {

/// Raised when an operation is called outside its domain (bad level, bad
/// flat, unsupported dimension). The message starts with a short stable
/// phrase such as "insufficient resolution" that callers may match on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for malformed run configurations and input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cantor
