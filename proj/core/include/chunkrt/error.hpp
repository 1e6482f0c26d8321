// Copyright 2026 The chunkrt Authors
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

#ifndef CHUNKRT_ERROR_HPP_
#define CHUNKRT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace chunkrt {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, malformed config or inconsistent inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent files on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

// IK target outside the arm's reach sphere.
class UnreachableError : public Error {
 public:
  using Error::Error;
};

}  // namespace chunkrt

#endif  // CHUNKRT_ERROR_HPP_
