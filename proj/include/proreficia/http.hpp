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

#include <chrono>
#include <string>
#include <utility>
#include <vector>

// Minimal JSON-over-HTTP transport shared by the chat, embedding and NLI
// clients. Keeps the HTTP library out of every other translation unit.
namespace proreficia::net {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResult {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to `base_url` + `path`. Transport failures throw a
/// transient BackendError; any HTTP status is returned to the caller.
HttpResult post_json(const std::string& base_url, const std::string& path, const std::string& body,
                     const Headers& headers, std::chrono::seconds timeout);

HttpResult get(const std::string& base_url, const std::string& path, const Headers& headers,
               std::chrono::seconds timeout);

/// Throws BackendError for non-2xx statuses: 429 and 5xx are transient,
/// everything else permanent. `what` prefixes the message.
void check_status(const HttpResult& result, const std::string& what);

/// Authorization header from an environment variable, if it is set.
Headers bearer_from_env(const std::string& env_var);

}  // namespace proreficia::net
