#pragma once

#include <stdexcept>
#include <string>

namespace coaudit {

// Error taxonomy mirrors the CLI exit codes: validation -> 2, adapter -> 3,
// I/O -> 4.

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct AdapterError : std::runtime_error {
  explicit AdapterError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coaudit
