#pragma once

#include <stdexcept>
#include <string>

namespace jsr {

// Raised when an iterative solver stops at its iteration cap without meeting
// its optimality test. Solvers derive from this to attach their best iterate.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// The data does not pin down a unique solution (e.g. a disconnected
// comparison graph).
class UnderdeterminedError : public std::runtime_error {
 public:
  explicit UnderdeterminedError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unreadable files.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or incomplete run configuration (missing required paths,
// inconsistent options).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jsr
