#pragma once

#include <stdexcept>
#include <string>

namespace robtext {

// Bad specification, rule, or command-line configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed data file (datasets, embeddings, checkpoints).
// CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested computation exceeds its configured resource bound
// (enumeration budget, DP state bound). Callers decide whether to fall
// back or report the example as skipped.
struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace robtext
