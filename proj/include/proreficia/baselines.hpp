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
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proreficia/corpus.hpp"
#include "proreficia/impact.hpp"
#include "proreficia/llmclient.hpp"
#include "proreficia/pipeline.hpp"

namespace proreficia::baselines {

using Embedding = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per text, same order. An empty input gives an empty result.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
};

/// Feature-hashed bag of word tokens, unit-normalized. Pure and offline;
/// it captures shared vocabulary only.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256);

  Embedding embed_one(std::string_view text) const;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

struct EmbeddingEndpoint {
  std::string base_url;
  std::string path = "/v1/embeddings";
  std::string model = "text-embedding-3-large";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{120};
};

/// POST {model, input:[...]} and read `data[i].embedding`, placed by
/// `data[i].index` when present.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(EmbeddingEndpoint endpoint, llm::RetryPolicy retry = {});
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

  void set_sleep(std::function<void(std::chrono::milliseconds)> sleep) { sleep_ = std::move(sleep); }

 private:
  EmbeddingEndpoint endpoint_;
  llm::RetryPolicy retry_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

/// dot(a, b) / (|a| |b|). Throws DataError on a dimension mismatch or a
/// zero vector.
double cosine(const Embedding& a, const Embedding& b);

struct ScoredRequirement {
  std::string req_id;
  double score = 0.0;

  friend bool operator==(const ScoredRequirement&, const ScoredRequirement&) = default;
};

/// Scores sorted descending; equal scores keep their incoming order.
using SimilarityRanking = std::vector<ScoredRequirement>;

SimilarityRanking sort_ranking(std::vector<ScoredRequirement> scores);

/// Cosine between the rationale and every requirement, ranked. Ties are
/// broken by dataset order.
SimilarityRanking rank_by_similarity(const corpus::ChangeRationale& rationale, const corpus::Dataset& dataset,
                                     Embedder& embedder);

enum class CutoffStrategy { T1, T2, T3 };

std::optional<CutoffStrategy> parse_cutoff(std::string_view s);

/// Every requirement scoring strictly above `theta`.
std::vector<std::string> cutoff_t1(const SimilarityRanking& ranking, double theta = 0.5);

/// Gaps d_i = s_i - s_{i+1}; a gap is significant when it exceeds a third
/// of the largest gap. Keeps the prefix ending just before the last
/// significant gap. Throws DataError for fewer than two items.
std::vector<std::string> cutoff_t2(const SimilarityRanking& ranking);

/// Keeps the prefix ending just before the largest gap (earliest on ties).
/// Throws DataError for fewer than two items.
std::vector<std::string> cutoff_t3(const SimilarityRanking& ranking);

std::vector<std::string> apply_cutoff(const SimilarityRanking& ranking, CutoffStrategy strategy, double theta = 0.5);

struct BaselineResult {
  std::string rationale_id;
  ImpactSet impact;
  pipeline::RunTrace trace;
};

/// Asks the impact prompt once per requirement, each time over a
/// one-requirement list, and unions the positives. Up to `parallel` calls
/// run at once; the trace keeps dataset order.
BaselineResult iterative_baseline(const corpus::ChangeRationale& rationale, const pipeline::StageContext& ctx,
                                  int parallel = 1);

/// Pair prompt for the retrieve-then-classify baseline. Placeholders:
/// `{source}`, `{target_id}`, `{target}`.
std::string render_cot_prompt(std::string_view pair_template, const corpus::ChangeRationale& rationale,
                              const corpus::Requirement& requirement);

/// Yes/no verdict: the last "Answer:" line wins, otherwise the last bare
/// yes/no word. nullopt when neither is present.
std::optional<bool> parse_yes_no(std::string_view text);

struct CotSettings {
  std::string pair_template;
  std::string model = "llama3-405b";
  llm::SamplingParams params;
  int parallel = 1;
};

/// Takes the top `k` of `ranking` and asks one yes/no pair prompt for each;
/// the impact set holds the "yes" answers in ranking order. An unreadable
/// verdict counts as "no" and is logged as a warning. Throws DataError
/// unless 1 <= k <= ranking size.
BaselineResult cot_baseline(const corpus::ChangeRationale& rationale, const corpus::Dataset& dataset,
                            const SimilarityRanking& ranking, std::size_t k, llm::ChatBackend& llm,
                            const CotSettings& settings);

/// k = 5, 10, ... up to `requirement_count`.
std::vector<std::size_t> default_k_grid(std::size_t requirement_count);

struct GridPoint {
  std::size_t k = 0;
  double f2 = 0.0;
};

struct GridResult {
  std::size_t best_k = 0;
  double best_f2 = 0.0;
  std::vector<GridPoint> points;
};

/// Evaluates every k of the grid and keeps the highest F2; ties go to the
/// smaller k. Throws DataError on an empty grid.
GridResult cot_grid_search(std::span<const std::size_t> grid, const std::function<double(std::size_t)>& evaluate);

}  // namespace proreficia::baselines
