// Copyright 2026 The turtlesmr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace turtlesmr {

// Caller violated an operation precondition (empty set, out-of-range id, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two chains that must agree do not.
class AgreementViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario or quorum parameters are inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A protocol-internal invariant failed. Under a correctly configured quorum
// system this is unreachable.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An exhaustive routine was asked to enumerate something too large.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Malformed input bytes or text.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace turtlesmr
