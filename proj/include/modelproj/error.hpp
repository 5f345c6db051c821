#pragma once

#include <stdexcept>
#include <string>

namespace modelproj {

// Bad input: shapes, invariants, configuration. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical procedure could not produce a result (singular matrix,
// rank-deficient design, degenerate neighbor distances). Maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace modelproj
