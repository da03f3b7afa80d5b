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

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>

#include "proreficia/corpus.hpp"
#include "proreficia/llmclient.hpp"
#include "proreficia/promptkit.hpp"

namespace proreficia::testing {

inline std::filesystem::path fixture_dir() { return PROREFICIA_FIXTURE_DIR; }
inline std::filesystem::path template_dir() { return PROREFICIA_TEMPLATE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("proreficia-test-{}-{}-{}", ::getpid(), counter++, rd());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// httplib server on an ephemeral localhost port, served from a thread.
class StubServer {
 public:
  StubServer() = default;
  ~StubServer() { stop(); }

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  std::string url() const { return fmt::format("http://127.0.0.1:{}", port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

/// Chat backend answering from a callback and remembering every request.
class RecordingBackend : public llm::ChatBackend {
 public:
  using Fn = std::function<std::string(const llm::ChatRequest&)>;
  explicit RecordingBackend(Fn fn) : fn_(std::move(fn)) {}

  llm::ChatResponse complete(const llm::ChatRequest& request) override {
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    llm::ChatResponse r;
    r.text = fn_(request);
    return r;
  }
  std::vector<llm::ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }
  std::size_t count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

 private:
  Fn fn_;
  mutable std::mutex mutex_;
  std::vector<llm::ChatRequest> requests_;
};

/// Requirement ids listed in an impact prompt ("<id>: <text>" lines after
/// "Requirements List:"), in prompt order.
inline std::vector<std::string> listed_ids(const std::string& prompt) {
  std::vector<std::string> ids;
  auto at = prompt.find("Requirements List:\n");
  if (at == std::string::npos) return ids;
  std::istringstream in(prompt.substr(at + 19));
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(": ");
    if (line.empty() || colon == std::string::npos) break;
    ids.push_back(line.substr(0, colon));
  }
  return ids;
}

inline std::string impact_lines(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += fmt::format("impacted ReqID: {} justification: touches {}\n", id, id);
  return out;
}

/// Synthetic corpus: `n_req` requirements R1.., `n_cr` rationales C1.., gold
/// drawn at random with the given impacted count spread over rationales.
inline corpus::Dataset synthetic_dataset(std::size_t n_req, std::size_t n_cr, std::size_t n_impacted,
                                         std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<corpus::Requirement> reqs;
  for (std::size_t i = 1; i <= n_req; ++i)
    reqs.push_back({fmt::format("R{}", i), fmt::format("The system shall provide function number {}.", i)});
  std::vector<corpus::ChangeRationale> crs;
  for (std::size_t i = 1; i <= n_cr; ++i)
    crs.push_back({fmt::format("C{}", i), fmt::format("Change request number {}.", i), std::nullopt});
  std::vector<std::size_t> order(n_req);
  for (std::size_t i = 0; i < n_req; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<corpus::GoldImpact> gold;
  for (std::size_t i = 0; i < n_cr; ++i) gold.push_back({crs[i].id, {}});
  for (std::size_t k = 0; k < n_impacted; ++k) gold[k % n_cr].impacted_ids.insert(reqs[order[k]].id);
  return corpus::Dataset("synthetic", std::move(reqs), std::move(crs), std::move(gold));
}

}  // namespace proreficia::testing
