// Copyright 2026 The pbmvfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PBMVFL_ERRORS_HPP_
#define PBMVFL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pbmvfl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Aggregation transcript is incomplete or inconsistent (missing share,
/// duplicate party, sum outside the feasible range).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters, seeds or experiment specification.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A forward cache is used after the network it came from was updated.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

}  // namespace pbmvfl

#endif  // PBMVFL_ERRORS_HPP_
