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

#include "proreficia/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>
#include <json.hpp>

#include "proreficia/error.hpp"
#include "proreficia/http.hpp"
#include "proreficia/parallel.hpp"
#include "proreficia/promptkit.hpp"
#include "proreficia/text.hpp"

namespace proreficia::baselines {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::string_view kEmptySentinel = "\x01<empty>";

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw DataError("embedding dimension must be positive");
}

Embedding HashingEmbedder::embed_one(std::string_view text) const {
  Embedding v(dimension_, 0.0);
  auto add = [&](std::string_view token) {
    std::uint64_t h = fnv1a(token);
    v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
  };
  for (const auto& tok : text::word_tokens(text)) add(tok);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    add(kEmptySentinel);
    norm = 1.0;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<Embedding> HashingEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

HttpEmbedder::HttpEmbedder(EmbeddingEndpoint endpoint, llm::RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
  if (endpoint_.base_url.empty()) throw DataError("embedding endpoint needs a base URL");
}

std::vector<Embedding> HttpEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  json body = {{"model", endpoint_.model}, {"input", json(std::vector<std::string>(texts.begin(), texts.end()))}};
  const std::string payload = body.dump();
  auto headers = net::bearer_from_env(endpoint_.api_key_env);
  net::HttpResult result = llm::with_retry(
      retry_,
      [&] {
        auto r = net::post_json(endpoint_.base_url, endpoint_.path, payload, headers, endpoint_.timeout);
        net::check_status(r, "embeddings");
        return r;
      },
      sleep_);

  std::vector<Embedding> out(texts.size());
  std::vector<bool> filled(texts.size(), false);
  try {
    const json doc = json::parse(result.body);
    const json& data = doc.at("data");
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t index = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
      if (index >= out.size() || filled[index])
        throw BackendError(fmt::format("embeddings: bad or repeated index {}", index), false);
      out[index] = data[i].at("embedding").get<Embedding>();
      filled[index] = true;
    }
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("embeddings: malformed response body: {}", e.what()), false);
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end())
    throw BackendError(fmt::format("embeddings: expected {} vectors", texts.size()), false);
  for (const auto& v : out)
    if (v.size() != out.front().size()) throw BackendError("embeddings: inconsistent vector dimensions", false);
  return out;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw DataError(fmt::format("cosine: dimension mismatch ({} vs {})", a.size(), b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SimilarityRanking sort_ranking(std::vector<ScoredRequirement> scores) {
  std::stable_sort(scores.begin(), scores.end(),
                   [](const ScoredRequirement& a, const ScoredRequirement& b) { return a.score > b.score; });
  return scores;
}

SimilarityRanking rank_by_similarity(const corpus::ChangeRationale& rationale, const corpus::Dataset& dataset,
                                     Embedder& embedder) {
  const auto& reqs = dataset.requirements();
  if (reqs.empty()) throw DataError(fmt::format("dataset {} has no requirements", dataset.name()));
  std::vector<std::string> texts;
  texts.reserve(reqs.size() + 1);
  texts.push_back(rationale.text);
  for (const auto& r : reqs) texts.push_back(r.text);
  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size())
    throw BackendError(fmt::format("embedder returned {} vectors for {} texts", vectors.size(), texts.size()), false);

  std::vector<ScoredRequirement> scores;
  scores.reserve(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) scores.push_back({reqs[i].id, cosine(vectors[0], vectors[i + 1])});
  return sort_ranking(std::move(scores));
}

std::optional<CutoffStrategy> parse_cutoff(std::string_view s) {
  std::string l = text::to_lower(s);
  if (l == "t1") return CutoffStrategy::T1;
  if (l == "t2") return CutoffStrategy::T2;
  if (l == "t3") return CutoffStrategy::T3;
  return std::nullopt;
}

namespace {

std::vector<std::string> prefix(const SimilarityRanking& r, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(r[i].req_id);
  return out;
}

std::vector<double> gaps(const SimilarityRanking& r, std::string_view who) {
  if (r.size() < 2) throw DataError(fmt::format("{} needs at least two ranked requirements", who));
  std::vector<double> d(r.size() - 1);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) d[i] = r[i].score - r[i + 1].score;
  return d;
}

}  // namespace

std::vector<std::string> cutoff_t1(const SimilarityRanking& ranking, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DataError("T1 threshold must be in [0,1]");
  std::vector<std::string> out;
  for (const auto& s : ranking)
    if (s.score > theta) out.push_back(s.req_id);
  return out;
}

std::vector<std::string> cutoff_t2(const SimilarityRanking& ranking) {
  auto d = gaps(ranking, "T2");
  const double limit = *std::max_element(d.begin(), d.end()) / 3.0;
  std::size_t keep = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > limit) keep = i + 1;
  return prefix(ranking, keep);
}

std::vector<std::string> cutoff_t3(const SimilarityRanking& ranking) {
  auto d = gaps(ranking, "T3");
  auto it = std::max_element(d.begin(), d.end());
  return prefix(ranking, static_cast<std::size_t>(it - d.begin()) + 1);
}

std::vector<std::string> apply_cutoff(const SimilarityRanking& ranking, CutoffStrategy strategy, double theta) {
  switch (strategy) {
    case CutoffStrategy::T1:
      return cutoff_t1(ranking, theta);
    case CutoffStrategy::T2:
      return cutoff_t2(ranking);
    case CutoffStrategy::T3:
      return cutoff_t3(ranking);
  }
  throw DataError("unknown cutoff strategy");
}

BaselineResult iterative_baseline(const corpus::ChangeRationale& rationale, const pipeline::StageContext& ctx,
                                  int parallel) {
  pipeline::validate(ctx.config);
  const auto spec = prompt::PromptSpec::from_id(ctx.config.prompt_id);
  const auto& reqs = ctx.dataset.requirements();
  const std::string domain = ctx.dataset.domain();

  std::vector<pipeline::RunTrace> traces(reqs.size());
  std::vector<std::vector<ImpactCandidate>> found(reqs.size());
  parallel_for(reqs.size(), parallel, [&](std::size_t i) {
    std::span<const corpus::Requirement> one(&reqs[i], 1);
    auto response =
        pipeline::ask(ctx, "iterative", prompt::render_cag_prompt(spec, rationale, one, ctx.catalog, domain), traces[i]);
    auto parsed = llm::parse_impact_output(response.text, {reqs[i].id});
    traces[i].calls.back().warnings = parsed.warnings;
    found[i] = std::move(parsed.candidates);
  });

  BaselineResult out;
  out.rationale_id = rationale.id;
  out.trace.rationale_id = rationale.id;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    for (auto& c : found[i]) out.impact.add(std::move(c));
    for (auto& call : traces[i].calls) out.trace.calls.push_back(std::move(call));
  }
  return out;
}

std::string render_cot_prompt(std::string_view pair_template, const corpus::ChangeRationale& rationale,
                              const corpus::Requirement& requirement) {
  std::string s(pair_template);
  s = text::replace_all(std::move(s), "{source}", rationale.text);
  s = text::replace_all(std::move(s), "{target_id}", requirement.id);
  s = text::replace_all(std::move(s), "{target}", requirement.text);
  return s;
}

std::optional<bool> parse_yes_no(std::string_view text) {
  auto verdict = [](std::string_view s) -> std::optional<bool> {
    for (const auto& tok : text::word_tokens(s)) {
      if (tok == "yes") return true;
      if (tok == "no") return false;
    }
    return std::nullopt;
  };
  auto lines = text::split_lines(text);
  for (std::size_t i = lines.size(); i-- > 0;) {
    std::string lower = text::to_lower(lines[i]);
    auto k = lower.find("answer");
    if (k == std::string::npos) continue;
    auto colon = lower.find(':', k);
    if (colon == std::string::npos) continue;
    if (auto v = verdict(std::string_view(lower).substr(colon + 1))) return v;
  }
  std::optional<bool> last;
  for (const auto& tok : text::word_tokens(text)) {
    if (tok == "yes") last = true;
    if (tok == "no") last = false;
  }
  return last;
}

BaselineResult cot_baseline(const corpus::ChangeRationale& rationale, const corpus::Dataset& dataset,
                            const SimilarityRanking& ranking, std::size_t k, llm::ChatBackend& llm,
                            const CotSettings& settings) {
  if (k < 1 || k > ranking.size())
    throw DataError(fmt::format("k must be in [1, {}], got {}", ranking.size(), k));
  if (settings.pair_template.empty()) throw DataError("CoT pair template is empty");

  std::vector<pipeline::LlmCall> calls(k);
  std::vector<std::optional<bool>> verdicts(k);
  parallel_for(k, settings.parallel, [&](std::size_t i) {
    const auto& req = dataset.requirement(ranking[i].req_id);
    llm::ChatRequest request{settings.model, render_cot_prompt(settings.pair_template, rationale, req),
                             settings.params};
    auto& call = calls[i];
    call.stage = "cot";
    call.digest = llm::request_digest(request);
    auto started = std::chrono::steady_clock::now();
    call.response = llm.complete(request).text;
    call.elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    call.prompt = std::move(request.prompt);
    verdicts[i] = parse_yes_no(call.response);
    if (!verdicts[i]) call.warnings.push_back(fmt::format("no yes/no verdict for {}; counted as no", req.id));
  });

  BaselineResult out;
  out.rationale_id = rationale.id;
  out.trace.rationale_id = rationale.id;
  for (std::size_t i = 0; i < k; ++i) {
    if (verdicts[i].value_or(false)) out.impact.add({ranking[i].req_id, "", CandidateOrigin::Initial});
    out.trace.calls.push_back(std::move(calls[i]));
  }
  return out;
}

std::vector<std::size_t> default_k_grid(std::size_t requirement_count) {
  std::vector<std::size_t> grid;
  for (std::size_t k = 5; k <= requirement_count; k += 5) grid.push_back(k);
  return grid;
}

GridResult cot_grid_search(std::span<const std::size_t> grid, const std::function<double(std::size_t)>& evaluate) {
  if (grid.empty()) throw DataError("k grid is empty");
  std::vector<std::size_t> ks(grid.begin(), grid.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  GridResult out;
  for (std::size_t k : ks) {
    double f2 = evaluate(k);
    out.points.push_back({k, f2});
    if (out.best_k == 0 || f2 > out.best_f2) {
      out.best_k = k;
      out.best_f2 = f2;
    }
  }
  return out;
}

}  // namespace proreficia::baselines
