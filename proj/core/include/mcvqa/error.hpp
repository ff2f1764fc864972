// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mcvqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Finite-difference probe hit a non-finite function value.
class ProbeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Token id outside the vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

/// Sequence budget too small for the mandatory layout.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint does not match the model it is loaded into.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Not enough distinct candidates to sample from.
class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcvqa
