#pragma once

#include <stdexcept>
#include <string>

namespace bildrl {

// Error taxonomy. The CLI maps these onto process exit codes:
//   usage errors -> 1, data/config/contract errors -> 2, numeric errors -> 3.

// Malformed input files (bad column counts, bad numbers, bad header lines).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid input that violates a semantic requirement
// (unknown language tag, empty corpus, incompatible dimensions in a config).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures and malformed binary checkpoints.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint contents inconsistent with their embedded config.
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation was called outside its documented precondition.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Insufficient or inconsistent data for an evaluation routine.
struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf encountered in losses, gradients, or parameters.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bildrl
