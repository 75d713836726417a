#pragma once

#include <stdexcept>
#include <string>

namespace ghk {

// Bad input: violated precondition, invalid kernel, malformed config.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Point outside the open orthant where a kernel is defined.
class DomainError : public SpecError {
 public:
  using SpecError::SpecError;
};

// Quadrature non-convergence, degenerate statistics, non-summable sums.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grid or replication request above the configured caps.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ghk
