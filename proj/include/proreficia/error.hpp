// Copyright 2026 The ProReFiCIA Authors.
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

#include <optional>
#include <stdexcept>
#include <string>

namespace proreficia {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input documents, failed validation, or missing data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to an LLM, embedding, or NLI backend.
///
/// `transient()` tells the retry loop whether another attempt may succeed
/// (transport failures, 429, 5xx). Replay misses and 4xx are permanent.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool transient,
               std::optional<int> status = std::nullopt)
      : Error(what), transient_(transient), status_(status) {}

  bool transient() const noexcept { return transient_; }
  std::optional<int> status() const noexcept { return status_; }

 private:
  bool transient_;
  std::optional<int> status_;
};

}  // namespace proreficia
