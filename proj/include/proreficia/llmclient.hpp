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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "proreficia/error.hpp"
#include "proreficia/impact.hpp"

namespace proreficia::llm {

/// Sampling parameters sent with every chat request. Defaults are the
/// deterministic settings used throughout: greedy decoding, fixed seed.
struct SamplingParams {
  double temperature = 0.0;
  std::int64_t seed = 16;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;

  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  SamplingParams params;
  /// Distinguishes deliberate re-asks of the same prompt (repetitions,
  /// ranking retries). Zero leaves the digest unchanged.
  std::uint32_t attempt = 0;
};

struct ChatResponse {
  std::string text;
  std::chrono::milliseconds latency{0};
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  bool from_replay = false;
};

/// Hex SHA-256 over model, every sampling parameter, the attempt index
/// (when non-zero) and the prompt.
std::string request_digest(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

/// Runs `call` and retries transient BackendErrors with exponential
/// backoff. Permanent errors and the last transient error propagate.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& call,
                const std::function<void(std::chrono::milliseconds)>& sleep = {}) -> decltype(call());

/// OpenAI-style chat-completions endpoint.
struct HttpEndpoint {
  std::string base_url;               // e.g. "https://api.openai.com"
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";  // bearer credential; unset means no header
  std::chrono::seconds timeout{300};
};

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpEndpoint endpoint, RetryPolicy retry = {});
  ChatResponse complete(const ChatRequest& request) override;

  /// Replaces the backoff sleep; tests use this to avoid waiting.
  void set_sleep(std::function<void(std::chrono::milliseconds)> sleep) { sleep_ = std::move(sleep); }

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

/// Wraps a plain function; handy for scripted backends.
class CallbackChatBackend : public ChatBackend {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit CallbackChatBackend(Fn fn) : fn_(std::move(fn)) {}
  ChatResponse complete(const ChatRequest& request) override {
    ChatResponse r;
    r.text = fn_(request);
    return r;
  }

 private:
  Fn fn_;
};

/// Directory of `<digest>.txt` files holding canned responses.
class ReplayStore {
 public:
  explicit ReplayStore(std::filesystem::path dir);

  std::optional<std::string> lookup(const std::string& digest) const;
  void put(const std::string& digest, const std::string& text);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

enum class ReplayMode { Record, Replay, StrictReplay };

std::optional<ReplayMode> parse_replay_mode(std::string_view s);

/// Serves responses from a ReplayStore.
///
/// Record: always asks the live backend and stores the answer.
/// Replay: serves stored answers, falls through to the live backend (and
///   records) on a miss.
/// StrictReplay: a miss is a permanent BackendError naming the digest; the
///   live backend is never consulted.
class ReplayBackend : public ChatBackend {
 public:
  ReplayBackend(std::shared_ptr<ReplayStore> store, ReplayMode mode,
                std::shared_ptr<ChatBackend> live = nullptr);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ReplayStore> store_;
  ReplayMode mode_;
  std::shared_ptr<ChatBackend> live_;
};

struct ImpactParse {
  std::vector<ImpactCandidate> candidates;
  std::vector<std::string> warnings;
};

/// Extracts "impacted ReqID: <ID> justification: <text>" lines.
///
/// Matching is case-insensitive and tolerates "," or ", " (or nothing)
/// between the id and "justification". Ids absent from `known_ids` are
/// dropped with a warning; repeated ids keep their first occurrence.
/// Never throws on untrusted text.
ImpactParse parse_impact_output(std::string_view text, const std::unordered_set<std::string>& known_ids,
                                CandidateOrigin origin = CandidateOrigin::Initial);

struct RankingParse {
  std::vector<std::string> order;
  std::vector<std::string> warnings;
};

/// Reads the last "Sorted_List:" line and returns a permutation of
/// `expected_ids`: unknown ids are dropped, missing ids are appended in
/// their original order (each with a warning). Throws DataError when the
/// text has no Sorted_List line at all.
RankingParse parse_ranking_output(std::string_view text, std::span<const std::string> expected_ids);

// ---------------------------------------------------------------------------

template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& call,
                const std::function<void(std::chrono::milliseconds)>& sleep) -> decltype(call()) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const BackendError& e) {
      if (!e.transient() || attempt >= policy.max_attempts) throw;
    }
    if (sleep)
      sleep(backoff);
    else
      std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(backoff.count()) * policy.multiplier));
  }
}

}  // namespace proreficia::llm
