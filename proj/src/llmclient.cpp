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

#include <algorithm>
#include "proreficia/llmclient.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "proreficia/http.hpp"
#include "proreficia/text.hpp"

namespace proreficia::llm {

using nlohmann::json;

std::string request_digest(const ChatRequest& request) {
  json canonical = {
      {"model", request.model},
      {"temperature", request.params.temperature},
      {"seed", request.params.seed},
      {"frequency_penalty", request.params.frequency_penalty},
      {"presence_penalty", request.params.presence_penalty},
      {"prompt", request.prompt},
  };
  if (request.attempt != 0) canonical["attempt"] = request.attempt;
  const std::string payload = canonical.dump();

  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

// --- HTTP backend ----------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
  if (endpoint_.base_url.empty()) throw DataError("chat endpoint needs a base URL");
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  json body = {
      {"model", request.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.params.temperature},
      {"seed", request.params.seed},
      {"frequency_penalty", request.params.frequency_penalty},
      {"presence_penalty", request.params.presence_penalty},
  };
  const std::string payload = body.dump();
  auto headers = net::bearer_from_env(endpoint_.api_key_env);

  auto started = std::chrono::steady_clock::now();
  net::HttpResult result = with_retry(
      retry_,
      [&] {
        auto r = net::post_json(endpoint_.base_url, endpoint_.path, payload, headers, endpoint_.timeout);
        net::check_status(r, "chat completion");
        return r;
      },
      sleep_);

  ChatResponse response;
  response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  try {
    json doc = json::parse(result.body);
    const json& content = doc.at("choices").at(0).at("message").at("content");
    response.text = content.is_null() ? std::string() : content.get<std::string>();
    if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
      if (usage->contains("prompt_tokens")) response.prompt_tokens = usage->at("prompt_tokens").get<std::int64_t>();
      if (usage->contains("completion_tokens"))
        response.completion_tokens = usage->at("completion_tokens").get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("chat completion: malformed response body: {}", e.what()), false);
  }
  return response;
}

// --- Replay ----------------------------------------------------------------

ReplayStore::ReplayStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<std::string> ReplayStore::lookup(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  std::ifstream in(dir_ / (digest + ".txt"), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ReplayStore::put(const std::string& digest, const std::string& text) {
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(dir_);
  auto final_path = dir_ / (digest + ".txt");
  auto tmp_path = dir_ / (digest + ".txt.tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write replay entry {}", tmp_path.string()));
    out << text;
  }
  std::filesystem::rename(tmp_path, final_path);
}

std::optional<ReplayMode> parse_replay_mode(std::string_view s) {
  if (s == "record") return ReplayMode::Record;
  if (s == "replay") return ReplayMode::Replay;
  if (s == "strict" || s == "strict-replay") return ReplayMode::StrictReplay;
  return std::nullopt;
}

ReplayBackend::ReplayBackend(std::shared_ptr<ReplayStore> store, ReplayMode mode, std::shared_ptr<ChatBackend> live)
    : store_(std::move(store)), mode_(mode), live_(std::move(live)) {
  if (!store_) throw DataError("replay backend needs a store");
  if (mode_ == ReplayMode::Record && !live_) throw DataError("record mode needs a live backend");
}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
  const std::string digest = request_digest(request);
  if (mode_ != ReplayMode::Record) {
    if (auto hit = store_->lookup(digest)) {
      ChatResponse r;
      r.text = std::move(*hit);
      r.from_replay = true;
      return r;
    }
    if (mode_ == ReplayMode::StrictReplay || !live_)
      throw BackendError(fmt::format("replay miss for digest {} in {}", digest, store_->dir().string()), false);
  }
  ChatResponse r = live_->complete(request);
  store_->put(digest, r.text);
  return r;
}

// --- Parsers ---------------------------------------------------------------

namespace {

bool id_char(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '-' ||
         c == '.' || c == '/';
}

std::size_t skip_decor(std::string_view s, std::size_t pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '*' || s[pos] == '_' || s[pos] == ':' ||
                            s[pos] == '`' || s[pos] == '"' || s[pos] == '\''))
    ++pos;
  return pos;
}

// Finds "reqid" / "req id" / "req_id" right after position `pos` (ignoring
// decoration); returns the index just past it, or npos.
std::size_t match_reqid(std::string_view lower, std::size_t pos) {
  pos = skip_decor(lower, pos);
  if (lower.compare(pos, 3, "req") != 0) return std::string_view::npos;
  pos += 3;
  if (pos < lower.size() && (lower[pos] == ' ' || lower[pos] == '_' || lower[pos] == '-')) ++pos;
  if (lower.compare(pos, 2, "id") != 0) return std::string_view::npos;
  return pos + 2;
}

}  // namespace

ImpactParse parse_impact_output(std::string_view text, const std::unordered_set<std::string>& known_ids,
                                CandidateOrigin origin) {
  ImpactParse out;
  std::unordered_map<std::string, std::string> folded;  // lowercase id -> canonical id
  for (const auto& id : known_ids) folded.emplace(text::to_lower(id), id);
  std::unordered_set<std::string> seen;

  auto lines = text::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = lines[ln];
    std::string lower = text::to_lower(line);
    std::size_t at = lower.find("impacted");
    std::size_t after = std::string_view::npos;
    while (at != std::string::npos) {
      after = match_reqid(lower, at + 8);
      if (after != std::string_view::npos) break;
      at = lower.find("impacted", at + 8);
    }
    if (after == std::string_view::npos) continue;

    std::size_t id_begin = skip_decor(lower, after);
    std::size_t id_end = id_begin;
    while (id_end < line.size() && id_char(line[id_end])) ++id_end;
    std::string id(line.substr(id_begin, id_end - id_begin));
    while (!id.empty() && (id.back() == '.' || id.back() == '-')) id.pop_back();
    if (id.empty()) {
      out.warnings.push_back(fmt::format("line {}: impact line without a requirement id", ln + 1));
      continue;
    }

    std::string justification;
    std::size_t j = lower.find("justification", id_end);
    if (j != std::string::npos) {
      justification = std::string(text::trim(line.substr(skip_decor(lower, j + 13))));
    } else {
      std::size_t rest = id_end;
      while (rest < line.size() && (line[rest] == ',' || line[rest] == ' ' || line[rest] == '\t')) ++rest;
      justification = std::string(text::trim(line.substr(rest)));
    }

    std::string canonical;
    if (known_ids.contains(id)) {
      canonical = id;
    } else if (auto it = folded.find(text::to_lower(id)); it != folded.end()) {
      canonical = it->second;
    } else {
      out.warnings.push_back(fmt::format("line {}: unknown requirement id '{}' dropped", ln + 1, id));
      continue;
    }
    if (!seen.insert(canonical).second) {
      out.warnings.push_back(fmt::format("line {}: repeated requirement id '{}' ignored", ln + 1, canonical));
      continue;
    }
    out.candidates.push_back({canonical, std::move(justification), origin});
  }
  return out;
}

RankingParse parse_ranking_output(std::string_view text, std::span<const std::string> expected_ids) {
  auto lines = text::split_lines(text);
  std::size_t found = lines.size();
  std::size_t colon = std::string::npos;
  for (std::size_t i = lines.size(); i-- > 0;) {
    std::string lower = text::to_lower(lines[i]);
    std::size_t k = lower.find("sorted_list");
    if (k == std::string::npos) k = lower.find("sorted list");
    if (k == std::string::npos) continue;
    found = i;
    colon = lower.find(':', k);
    break;
  }
  if (found == lines.size()) throw DataError("ranking output has no Sorted_List line");

  // Ids usually follow on the same line; a bare "Sorted_List:" header takes
  // the following non-empty lines up to the next blank line.
  std::string payload;
  if (colon != std::string::npos) payload = std::string(lines[found].substr(colon + 1));
  if (text::trim(payload).empty()) {
    for (std::size_t i = found + 1; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) {
        if (payload.empty()) continue;
        break;
      }
      payload += ' ';
      payload += lines[i];
    }
  }

  std::unordered_map<std::string, std::string> folded;
  for (const auto& id : expected_ids) folded.emplace(text::to_lower(id), id);

  RankingParse out;
  std::unordered_set<std::string> placed;
  std::string token;
  auto flush = [&] {
    while (!token.empty() && (token.back() == '.' || token.back() == '-')) token.pop_back();
    if (token.empty()) return;
    auto it = folded.find(text::to_lower(token));
    const bool list_marker = std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (it == folded.end() && list_marker) {
      token.clear();
      return;
    }
    if (it == folded.end()) {
      out.warnings.push_back(fmt::format("ranking names unknown id '{}'", token));
    } else if (placed.insert(it->second).second) {
      out.order.push_back(it->second);
    }
    token.clear();
  };
  for (char c : payload) {
    if (id_char(c))
      token.push_back(c);
    else
      flush();
  }
  flush();

  for (const auto& id : expected_ids) {
    if (placed.insert(id).second) {
      out.order.push_back(id);
      out.warnings.push_back(fmt::format("ranking omitted '{}'; appended at the tail", id));
    }
  }
  return out;
}

}  // namespace proreficia::llm
