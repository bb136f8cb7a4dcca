// Copyright 2026 The rnx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <stdexcept>
#include <string>

namespace rnx {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or does not follow its format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or GraphConfig is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required weight entry is absent or has the wrong shape.
class WeightError : public Error {
 public:
  using Error::Error;
};

}  // namespace rnx
