// Copyright 2026 The c2f Authors. All Rights Reserved.
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

namespace c2f {

// Base class for every error raised by the core. The C API maps each subclass
// onto a status code (see c2f.h).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed or unknown config keys, invalid parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor or mask shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Refusal to overwrite an existing dataset root or run directory.
class ExistsError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, empty datasets and other failures during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace c2f
