// Copyright 2026 The rrsitr Authors.
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rrsitr {

// Base of every error raised by the library. The CLI maps the concrete type
// onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameters, shapes, counts or flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed RRSE / RRSP files. Carries the byte offset at which decoding
// stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Data that is well-formed but unusable for the requested operation, e.g.
// evaluating on a split that carries noisy labels.
class DataError : public Error {
 public:
  using Error::Error;
};

// Zero-norm embeddings, non-finite losses, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Broken internal contract (mismatched lengths between cooperating stages).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rrsitr
