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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proreficia/corpus.hpp"
#include "proreficia/entailment.hpp"
#include "proreficia/impact.hpp"
#include "proreficia/llmclient.hpp"
#include "proreficia/promptkit.hpp"

namespace proreficia::pipeline {

enum class RankingFallback { Retry, InputOrder };

struct PipelineConfig {
  std::string prompt_id = "P30";
  bool refinement = true;
  bool filtering = true;
  /// Upper bound on the estimated prompt size (characters / 4) of one
  /// impact prompt; larger requirement lists are split into batches.
  std::size_t batch_token_budget = 100000;
  int repetitions = 1;
  RankingFallback ranking_fallback = RankingFallback::Retry;
  std::string model = "llama3-405b";
  llm::SamplingParams params;
  /// Request attempt offset; set per repetition so repeated runs do not
  /// collapse onto the same replay entry.
  std::uint32_t attempt_base = 0;
};

/// Throws DataError for an invalid configuration.
void validate(const PipelineConfig& config);

struct LlmCall {
  std::string stage;  // "initial", "refinement", "ranking", "iterative", "cot"
  std::string digest;
  std::string prompt;
  std::string response;
  std::vector<std::string> warnings;
  std::chrono::milliseconds elapsed{0};
};

struct RunTrace {
  std::string rationale_id;
  std::vector<LlmCall> calls;
  std::vector<std::string> warnings;
  /// Entailment labels fed to selection, aligned with the ranked list.
  std::vector<std::pair<std::string, int>> labels;

  std::size_t count_stage(std::string_view stage) const;
};

/// Everything a stage needs besides the rationale.
struct StageContext {
  const corpus::Dataset& dataset;
  const prompt::DetailTextCatalog& catalog;
  llm::ChatBackend& llm;
  const PipelineConfig& config;
};

/// Estimated token count of a prompt: ceil(characters / 4).
std::size_t estimate_tokens(std::string_view text);

/// Greedy split of `line_chars` into consecutive batches so that
/// overhead + lines stays within `budget_tokens`. A line that does not fit
/// even on its own becomes a batch by itself.
std::vector<std::vector<std::size_t>> plan_batches(std::size_t overhead_chars, std::span<const std::size_t> line_chars,
                                                   std::size_t budget_tokens);

/// Sends one prompt through the backend and records it in the trace.
llm::ChatResponse ask(const StageContext& ctx, std::string_view stage, std::string prompt, RunTrace& trace,
                      std::uint32_t attempt = 0);

/// Impact prompt over the full requirement list (batched when over
/// budget); candidates are unioned across batches in first-seen order.
ImpactSet initial_pass(const corpus::ChangeRationale& rationale, const StageContext& ctx, RunTrace& trace);

/// Re-asks over the requirements `first` did not select and returns the
/// union. Returns `first` untouched when nothing is left to ask about.
ImpactSet refinement_pass(const corpus::ChangeRationale& rationale, const ImpactSet& first, const StageContext& ctx,
                          RunTrace& trace);

/// Reorders the candidates by the model's confidence ranking. A single
/// candidate is returned without a call.
ImpactSet rank(const corpus::ChangeRationale& rationale, const ImpactSet& candidates, const StageContext& ctx,
               RunTrace& trace);

/// Selection over a ranked list: lists of at most 5 pass through; longer
/// lists keep an item iff it is entailed or sits in the top half
/// (1-based position <= floor(n/2)). Throws DataError on length mismatch.
ImpactSet select(const ImpactSet& ranked, std::span<const entailment::EntailmentLabel> labels);

struct RunResult {
  std::string rationale_id;
  ImpactSet initial;
  ImpactSet refined;
  std::optional<ImpactSet> ranked;
  ImpactSet final_set;
  RunTrace trace;
};

/// Initial pass plus refinement (when enabled): the part of a run that does
/// not need entailment labels.
RunResult discover(const corpus::ChangeRationale& rationale, const StageContext& ctx);

/// Ranking and selection on top of `discover`'s output when filtering is
/// enabled; otherwise the refined set is final. `labels` may be null only
/// when filtering is disabled.
void finish(RunResult& result, const corpus::ChangeRationale& rationale, const StageContext& ctx,
            entailment::LabelSource* labels);

RunResult run(const corpus::ChangeRationale& rationale, const StageContext& ctx, entailment::LabelSource* labels);

/// Runs every rationale of the dataset, up to `parallel` at a time.
/// Results come back in dataset order.
std::vector<RunResult> run_all(const StageContext& ctx, entailment::LabelSource* labels, int parallel = 1);

/// Like run_all, but with labels from leave-one-out training on an NLI
/// service: discovery for all rationales, one fold per rationale, then
/// ranking and selection.
std::vector<RunResult> run_all_loo(const StageContext& ctx, entailment::NliService& service,
                                   const entailment::TrainHyperparams& hp, int parallel = 1);

struct StageSnapshot {
  std::string name;
  const ImpactSet* set = nullptr;
};

/// Writes `<out>/<rationale>/impact_set.json`, `stages.json`, `trace.json`
/// and `warnings.log`. Output bytes depend only on the arguments; call
/// timings are left out unless asked for.
void write_run_files(const std::filesystem::path& out_dir, const std::string& rationale_id,
                     const std::string& impact_document, std::span<const StageSnapshot> stages, const RunTrace& trace,
                     bool include_timings = false);

/// write_run_files for a pipeline run. Stages are "initial", "refinement"
/// (when that pass ran) and "final".
void write_artifacts(const std::filesystem::path& out_dir, const RunResult& result,
                     bool include_timings = false);

/// Impact-set document: the final candidates with their position in
/// `ranked` (null when unranked).
std::string impact_set_document(const std::string& rationale_id, const ImpactSet& final_set,
                                const ImpactSet* ranked);
std::string impact_set_document(const RunResult& result);

/// Reads `stages.json` back: stage name -> requirement ids.
std::vector<std::pair<std::string, std::vector<std::string>>> read_stages(const std::filesystem::path& rationale_dir);

}  // namespace proreficia::pipeline
