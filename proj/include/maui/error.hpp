#pragma once

#include <stdexcept>
#include <string>

namespace maui {

// Bad parameters or malformed configuration: caller gave us something
// that can never work regardless of the data.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid request that fails on the actual data: missing files,
// malformed records, degenerate inputs.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace maui
