// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace qgeom {

// Argument outside the mathematical domain of an operation (negative sigma,
// non-finite input, t < 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input is valid but collapses the operation: all-zero vectors, constant
// clamp ranges, zero-range batch-norm features.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Gaussian tail probability underflowed to zero.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Length or shape mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration file or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An output file could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qgeom
