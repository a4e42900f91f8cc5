/*
 * Copyright 2026 The hiexpl Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HIEXPL_ERROR_HPP_
#define HIEXPL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hiexpl {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree (matrix-vector products, decomposition inputs,
// optimizer parameter lists).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A NaN or infinity escaped a numeric operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed text input: TSV datasets, tree files, phrase specs.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation's precondition (bad span, empty sample set,
// incompatible method/sampler).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Model container errors. The three subclasses are distinct so callers can
// tell a foreign file from a damaged one.
class FormatError : public Error {
 public:
  using Error::Error;
};
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};
class ShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Correlation over a constant series.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Exhaustive enumeration would exceed the configured cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

// Model training produced non-finite loss or failed its accuracy check.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// A phrase scorer failed while explaining a tree; the message names the
// span being scored.
class ScoringError : public Error {
 public:
  using Error::Error;
};

}  // namespace hiexpl

#endif  // HIEXPL_ERROR_HPP_
