#pragma once

#include <stdexcept>
#include <string>

namespace jointpred {

// Bad tensor shapes, malformed inputs, inconsistent configs. Maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public ValidationError {
 public:
  explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

// NaN/Inf where finite values are required, tolerance violations. Maps to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace jointpred
