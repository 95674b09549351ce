// Copyright 2026 The Authors.
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

namespace pcr {

// Base of every error thrown by the library. The CLI maps ConfigError to
// exit code 2 and every other Error to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing files, bad configuration values, unusable lexicon.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input records, markers, or serialized files.
class ParseError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Violated numeric preconditions (dimension mismatch, non-PSD kernels, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace pcr
