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

#include "proreficia/pipeline.hpp"

#include <fstream>
#include <map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "proreficia/error.hpp"
#include "proreficia/parallel.hpp"
#include "proreficia/text.hpp"

namespace proreficia::pipeline {

using nlohmann::json;
using corpus::ChangeRationale;
using corpus::Requirement;

void validate(const PipelineConfig& config) {
  prompt::PromptSpec::from_id(config.prompt_id);
  if (config.batch_token_budget == 0) throw DataError("batch token budget must be positive");
  if (config.repetitions < 1) throw DataError("repetition count must be at least 1");
  if (config.model.empty()) throw DataError("model name must not be empty");
}

std::size_t RunTrace::count_stage(std::string_view stage) const {
  std::size_t n = 0;
  for (const auto& c : calls) n += c.stage == stage ? 1 : 0;
  return n;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::vector<std::vector<std::size_t>> plan_batches(std::size_t overhead_chars, std::span<const std::size_t> line_chars,
                                                   std::size_t budget_tokens) {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  std::size_t chars = overhead_chars;
  for (std::size_t i = 0; i < line_chars.size(); ++i) {
    std::size_t next = chars + line_chars[i];
    if (!current.empty() && (next + 3) / 4 > budget_tokens) {
      batches.push_back(std::move(current));
      current.clear();
      next = overhead_chars + line_chars[i];
    }
    current.push_back(i);
    chars = next;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

llm::ChatResponse ask(const StageContext& ctx, std::string_view stage, std::string prompt, RunTrace& trace,
                      std::uint32_t attempt) {
  llm::ChatRequest request{ctx.config.model, std::move(prompt), ctx.config.params, ctx.config.attempt_base + attempt};
  LlmCall call;
  call.stage = std::string(stage);
  call.digest = llm::request_digest(request);
  auto started = std::chrono::steady_clock::now();
  llm::ChatResponse response = ctx.llm.complete(request);
  call.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  call.prompt = std::move(request.prompt);
  call.response = response.text;
  trace.calls.push_back(std::move(call));
  return response;
}

namespace {

std::unordered_set<std::string> id_set(std::span<const Requirement> reqs) {
  std::unordered_set<std::string> ids;
  for (const auto& r : reqs) ids.insert(r.id);
  return ids;
}

std::size_t line_chars(const Requirement& r) { return r.id.size() + 2 + text::flatten_line(r.text).size() + 1; }

// Runs the impact prompt over `reqs`, batching when the prompt would exceed
// the budget, and adds parsed candidates to `into`.
void impact_query(const ChangeRationale& rationale, std::span<const Requirement> reqs, CandidateOrigin origin,
                  std::string_view stage, const StageContext& ctx, RunTrace& trace, ImpactSet& into) {
  const auto spec = prompt::PromptSpec::from_id(ctx.config.prompt_id);
  const std::string domain = ctx.dataset.domain();

  std::vector<std::size_t> chars;
  chars.reserve(reqs.size());
  for (const auto& r : reqs) chars.push_back(line_chars(r));
  std::string probe = prompt::render_cag_prompt(spec, rationale, reqs.first(1), ctx.catalog, domain);
  std::size_t overhead = probe.size() - chars.front();

  auto batches = plan_batches(overhead, chars, ctx.config.batch_token_budget);
  for (const auto& batch : batches) {
    std::vector<Requirement> subset;
    subset.reserve(batch.size());
    for (std::size_t i : batch) subset.push_back(reqs[i]);
    std::string text = origin == CandidateOrigin::Initial
                           ? prompt::render_cag_prompt(spec, rationale, subset, ctx.catalog, domain)
                           : prompt::render_refinement_prompt(spec, rationale, subset, ctx.catalog, domain);
    if (estimate_tokens(text) > ctx.config.batch_token_budget)
      trace.warnings.push_back(fmt::format("{}: a single requirement exceeds the token budget ({} > {})", stage,
                                           estimate_tokens(text), ctx.config.batch_token_budget));
    auto response = ask(ctx, stage, std::move(text), trace);
    // Only ids shown in this batch count as valid answers.
    auto parsed = llm::parse_impact_output(response.text, id_set(subset), origin);
    trace.calls.back().warnings = parsed.warnings;
    for (auto& c : parsed.candidates) into.add(std::move(c));
  }
}

}  // namespace

ImpactSet initial_pass(const ChangeRationale& rationale, const StageContext& ctx, RunTrace& trace) {
  const auto& reqs = ctx.dataset.requirements();
  if (reqs.empty()) throw DataError(fmt::format("dataset {} has no requirements", ctx.dataset.name()));
  ImpactSet out;
  impact_query(rationale, reqs, CandidateOrigin::Initial, "initial", ctx, trace, out);
  return out;
}

ImpactSet refinement_pass(const ChangeRationale& rationale, const ImpactSet& first, const StageContext& ctx,
                          RunTrace& trace) {
  std::vector<Requirement> complement;
  for (const auto& r : ctx.dataset.requirements())
    if (!first.contains(r.id)) complement.push_back(r);
  ImpactSet out = first;
  if (complement.empty()) return out;
  impact_query(rationale, complement, CandidateOrigin::Refinement, "refinement", ctx, trace, out);
  return out;
}

ImpactSet rank(const ChangeRationale& rationale, const ImpactSet& candidates, const StageContext& ctx,
               RunTrace& trace) {
  if (candidates.empty()) throw DataError("cannot rank an empty impact set");
  if (candidates.size() == 1) return candidates;

  auto text_of = [&](std::string_view id) { return ctx.dataset.requirement(id).text; };
  std::string prompt_text = prompt::render_ranking_prompt(rationale, candidates.items(), text_of);
  const auto expected = candidates.ids();

  std::optional<llm::RankingParse> parsed;
  const int attempts = ctx.config.ranking_fallback == RankingFallback::Retry ? 2 : 1;
  for (int attempt = 0; attempt < attempts && !parsed; ++attempt) {
    auto response = ask(ctx, "ranking", prompt_text, trace, static_cast<std::uint32_t>(attempt));
    try {
      parsed = llm::parse_ranking_output(response.text, expected);
      trace.calls.back().warnings = parsed->warnings;
    } catch (const DataError& e) {
      trace.calls.back().warnings.push_back(e.what());
    }
  }
  if (!parsed) {
    if (ctx.config.ranking_fallback == RankingFallback::Retry)
      throw DataError(fmt::format("ranking for {} failed: no Sorted_List line after retry", rationale.id));
    trace.warnings.push_back("ranking output unusable; keeping discovery order");
    return candidates;
  }

  std::map<std::string, const ImpactCandidate*> by_id;
  for (const auto& c : candidates) by_id.emplace(c.req_id, &c);
  ImpactSet out;
  for (const auto& id : parsed->order) out.add(*by_id.at(id));
  return out;
}

ImpactSet select(const ImpactSet& ranked, std::span<const entailment::EntailmentLabel> labels) {
  if (labels.size() != ranked.size())
    throw DataError(fmt::format("selection got {} labels for {} candidates", labels.size(), ranked.size()));
  const std::size_t n = ranked.size();
  if (n <= 5) return ranked;
  ImpactSet out;
  for (std::size_t i = 1; i <= n; ++i) {
    if (labels[i - 1] == entailment::EntailmentLabel::Entailed || i <= n / 2) out.add(ranked[i - 1]);
  }
  return out;
}

RunResult discover(const ChangeRationale& rationale, const StageContext& ctx) {
  validate(ctx.config);
  RunResult result;
  result.rationale_id = rationale.id;
  result.trace.rationale_id = rationale.id;
  result.initial = initial_pass(rationale, ctx, result.trace);
  result.refined =
      ctx.config.refinement ? refinement_pass(rationale, result.initial, ctx, result.trace) : result.initial;
  return result;
}

void finish(RunResult& result, const ChangeRationale& rationale, const StageContext& ctx,
            entailment::LabelSource* labels) {
  if (!ctx.config.filtering || result.refined.empty()) {
    result.final_set = result.refined;
    return;
  }
  result.ranked = rank(rationale, result.refined, ctx, result.trace);
  if (result.ranked->size() <= 5) {
    result.final_set = *result.ranked;
    return;
  }
  if (labels == nullptr) throw DataError("filtering is enabled but no entailment label source was given");
  auto lab = labels->labels(rationale, *result.ranked, ctx.dataset);
  for (std::size_t i = 0; i < lab.size() && i < result.ranked->size(); ++i)
    result.trace.labels.emplace_back((*result.ranked)[i].req_id, entailment::to_int(lab[i]));
  result.final_set = select(*result.ranked, lab);
}

RunResult run(const ChangeRationale& rationale, const StageContext& ctx, entailment::LabelSource* labels) {
  RunResult result = discover(rationale, ctx);
  finish(result, rationale, ctx, labels);
  return result;
}

std::vector<RunResult> run_all(const StageContext& ctx, entailment::LabelSource* labels, int parallel) {
  const auto& rationales = ctx.dataset.rationales();
  std::vector<RunResult> results(rationales.size());
  parallel_for(rationales.size(), parallel, [&](std::size_t i) { results[i] = run(rationales[i], ctx, labels); });
  return results;
}

std::vector<RunResult> run_all_loo(const StageContext& ctx, entailment::NliService& service,
                                   const entailment::TrainHyperparams& hp, int parallel) {
  const auto& rationales = ctx.dataset.rationales();
  std::vector<RunResult> results(rationales.size());
  parallel_for(rationales.size(), parallel, [&](std::size_t i) { results[i] = discover(rationales[i], ctx); });

  std::map<std::string, ImpactSet> refined;
  for (const auto& r : results) refined.emplace(r.rationale_id, r.refined);
  auto folds = entailment::build_loo_folds(ctx.dataset, refined);
  entailment::PrecomputedLabelSource labels(entailment::run_loo(folds, service, hp));

  parallel_for(rationales.size(), parallel, [&](std::size_t i) { finish(results[i], rationales[i], ctx, &labels); });
  return results;
}

// --- Artifacts ---------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << content;
}

json id_array(const ImpactSet& s) { return s.ids(); }

}  // namespace

std::string impact_set_document(const std::string& rationale_id, const ImpactSet& final_set,
                                const ImpactSet* ranked) {
  std::map<std::string, std::size_t> rank_of;
  if (ranked != nullptr)
    for (std::size_t i = 0; i < ranked->size(); ++i) rank_of[(*ranked)[i].req_id] = i + 1;

  json candidates = json::array();
  for (const auto& c : final_set) {
    json item = {{"req_id", c.req_id},
                 {"justification", c.justification},
                 {"origin", std::string(to_string(c.origin))},
                 {"rank", nullptr}};
    if (auto it = rank_of.find(c.req_id); it != rank_of.end()) item["rank"] = it->second;
    candidates.push_back(std::move(item));
  }
  json doc = {{"rationale_id", rationale_id}, {"candidates", std::move(candidates)}};
  return doc.dump(2) + "\n";
}

std::string impact_set_document(const RunResult& result) {
  return impact_set_document(result.rationale_id, result.final_set, result.ranked ? &*result.ranked : nullptr);
}

void write_run_files(const std::filesystem::path& out_dir, const std::string& rationale_id,
                     const std::string& impact_document, std::span<const StageSnapshot> stages, const RunTrace& trace,
                     bool include_timings) {
  auto dir = out_dir / rationale_id;
  std::filesystem::create_directories(dir);
  write_file(dir / "impact_set.json", impact_document);

  json stage_list = json::array();
  for (const auto& s : stages) stage_list.push_back({{"stage", s.name}, {"ids", id_array(*s.set)}});
  write_file(dir / "stages.json", json({{"rationale_id", rationale_id}, {"stages", stage_list}}).dump(2) + "\n");

  json calls = json::array();
  std::string log;
  for (const auto& c : trace.calls) {
    json item = {{"stage", c.stage},
                 {"digest", c.digest},
                 {"prompt", c.prompt},
                 {"response", c.response},
                 {"warnings", c.warnings}};
    if (include_timings) item["elapsed_ms"] = c.elapsed.count();
    calls.push_back(std::move(item));
    for (const auto& w : c.warnings) log += fmt::format("[{}] {}\n", c.stage, w);
  }
  for (const auto& w : trace.warnings) log += fmt::format("[run] {}\n", w);
  json labels = json::array();
  for (const auto& [id, l] : trace.labels) labels.push_back({{"req_id", id}, {"label", l}});
  json doc = {{"rationale_id", rationale_id},
              {"calls", std::move(calls)},
              {"labels", std::move(labels)},
              {"warnings", trace.warnings}};
  write_file(dir / "trace.json", doc.dump(2) + "\n");
  write_file(dir / "warnings.log", log);
}

void write_artifacts(const std::filesystem::path& out_dir, const RunResult& result, bool include_timings) {
  std::vector<StageSnapshot> stages{{"initial", &result.initial}};
  if (result.trace.count_stage("refinement") > 0 || !(result.refined == result.initial))
    stages.push_back({"refinement", &result.refined});
  stages.push_back({"final", &result.final_set});
  write_run_files(out_dir, result.rationale_id, impact_set_document(result), stages, result.trace, include_timings);
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_stages(const std::filesystem::path& rationale_dir) {
  auto path = rationale_dir / "stages.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  try {
    json doc = json::parse(in);
    for (const json& s : doc.at("stages"))
      out.emplace_back(s.at("stage").get<std::string>(), s.at("ids").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return out;
}

}  // namespace proreficia::pipeline
