/* Copyright 2026 The asbnn Authors.

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#ifndef ASBNN_ERROR_HPP
#define ASBNN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace asbnn {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (matrix sizes, vector lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A value fell outside the mathematical domain of an operation (v <= 0 etc).
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Evaluation of a log density returned a non-finite value at `point`.
class NonFiniteDensity : public NumericError {
 public:
  NonFiniteDensity(const std::string& what, std::vector<double> point)
      : NumericError(what), point_(std::move(point)) {}
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A text cell or file record could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Standardization failed because a column has zero spread.
class ScalerError : public Error {
 public:
  ScalerError(const std::string& what, std::string column)
      : Error(what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Optimization produced NaN. `last_finite` holds the last finite iterate.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> last_finite)
      : Error(what), last_finite_(std::move(last_finite)) {}
  const std::vector<double>& last_finite() const noexcept {
    return last_finite_;
  }

 private:
  std::vector<double> last_finite_;
};

/// The Markov chain rejected every proposal for too many iterations.
class SamplerStuck : public Error {
 public:
  using Error::Error;
};

}  // namespace asbnn

#endif  // ASBNN_ERROR_HPP
