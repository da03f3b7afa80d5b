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

#include "proreficia/http.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>

#include "proreficia/error.hpp"

namespace proreficia::net {

namespace {

httplib::Client make_client(const std::string& base_url, std::chrono::seconds timeout) {
  httplib::Client client(base_url);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

httplib::Headers to_headers(const Headers& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

HttpResult unwrap(const httplib::Result& res, const std::string& base_url, const std::string& path) {
  if (!res)
    throw BackendError(fmt::format("{}{}: transport error: {}", base_url, path, httplib::to_string(res.error())),
                       /*transient=*/true);
  return {res->status, res->body};
}

}  // namespace

HttpResult post_json(const std::string& base_url, const std::string& path, const std::string& body,
                     const Headers& headers, std::chrono::seconds timeout) {
  auto client = make_client(base_url, timeout);
  auto res = client.Post(path, to_headers(headers), body, "application/json");
  return unwrap(res, base_url, path);
}

HttpResult get(const std::string& base_url, const std::string& path, const Headers& headers,
               std::chrono::seconds timeout) {
  auto client = make_client(base_url, timeout);
  auto res = client.Get(path, to_headers(headers));
  return unwrap(res, base_url, path);
}

void check_status(const HttpResult& result, const std::string& what) {
  if (result.status >= 200 && result.status < 300) return;
  bool transient = result.status == 429 || result.status >= 500;
  std::string snippet = result.body.substr(0, 300);
  throw BackendError(fmt::format("{}: HTTP {}: {}", what, result.status, snippet), transient, result.status);
}

Headers bearer_from_env(const std::string& env_var) {
  if (env_var.empty()) return {};
  const char* value = std::getenv(env_var.c_str());
  if (value == nullptr || *value == '\0') return {};
  return {{"Authorization", std::string("Bearer ") + value}};
}

}  // namespace proreficia::net
