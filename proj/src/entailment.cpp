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

#include "proreficia/entailment.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <json.hpp>

#include "proreficia/error.hpp"
#include "proreficia/http.hpp"
#include "proreficia/text.hpp"

namespace proreficia::entailment {

using nlohmann::json;

EntailmentPair make_pair(const corpus::ChangeRationale& rationale, const corpus::Requirement& requirement,
                         std::string_view justification) {
  std::string candidate = requirement.text;
  std::string_view just = text::trim(justification);
  if (!just.empty()) {
    candidate += ' ';
    candidate += just;
  }
  return {rationale.text, std::move(candidate)};
}

std::set<std::string> content_tokens(std::string_view s) {
  static const std::set<std::string> kStop = {
      "a",    "an",   "the",  "and",  "or",   "of",   "to",    "in",   "on",     "for",  "with",
      "by",   "be",   "is",   "are",  "was",  "were", "been",  "it",   "its",    "this", "that",
      "these", "those", "as", "at",   "from", "into", "shall", "should", "will", "must", "can",
      "may",  "not",  "no",   "all",  "any",  "each", "which", "when", "if",     "than", "then",
  };
  std::set<std::string> out;
  for (auto& tok : text::word_tokens(s))
    if (!kStop.contains(tok)) out.insert(std::move(tok));
  return out;
}

LexicalEntailment::LexicalEntailment(double threshold, OverlapMeasure measure)
    : threshold_(threshold), measure_(measure) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw DataError("lexical entailment threshold must be in [0,1]");
}

double LexicalEntailment::overlap(std::string_view premise, std::string_view hypothesis, OverlapMeasure measure) {
  auto p = content_tokens(premise);
  auto h = content_tokens(hypothesis);
  std::size_t common = 0;
  for (const auto& t : h) common += p.contains(t) ? 1 : 0;
  if (measure == OverlapMeasure::HypothesisCoverage)
    return h.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(h.size());
  std::size_t uni = p.size() + h.size() - common;
  return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

EntailmentLabel LexicalEntailment::label(const EntailmentPair& pair) const {
  return from_bool(overlap(pair.candidate_text, pair.rationale_text, measure_) >= threshold_);
}

std::vector<EntailmentLabel> LexicalEntailment::predict(std::span<const EntailmentPair> pairs) {
  std::vector<EntailmentLabel> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(label(p));
  return out;
}

// --- HTTP service ----------------------------------------------------------

namespace {

net::Headers token_header(const std::string& env_var) {
  if (env_var.empty()) return {};
  const char* value = std::getenv(env_var.c_str());
  if (value == nullptr || *value == '\0') return {};
  return {{"X-Auth-Token", value}};
}

json pair_json(const EntailmentPair& p) {
  return {{"rationale_text", p.rationale_text}, {"candidate_text", p.candidate_text}};
}

}  // namespace

HttpNliService::HttpNliService(NliEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.base_url.empty()) throw DataError("NLI service needs a base URL");
}

bool HttpNliService::health() {
  auto r = net::get(endpoint_.base_url, "/health", token_header(endpoint_.token_env), endpoint_.timeout);
  if (r.status != 200) return false;
  try {
    return json::parse(r.body).value("status", "") == "ok";
  } catch (const json::exception&) {
    return false;
  }
}

std::string HttpNliService::train(std::span<const LabeledPair> examples, const TrainHyperparams& hp) {
  json ex = json::array();
  for (const auto& e : examples) {
    json item = pair_json(e.pair);
    item["label"] = to_int(e.label);
    ex.push_back(std::move(item));
  }
  json body = {{"examples", std::move(ex)},
               {"hyperparams",
                {{"epochs", hp.epochs},
                 {"weight_decay", hp.weight_decay},
                 {"train_batch", hp.train_batch},
                 {"learning_rate", hp.learning_rate},
                 {"best_metric", hp.best_metric},
                 {"seed", hp.seed}}}};
  auto r = net::post_json(endpoint_.base_url, "/train", body.dump(), token_header(endpoint_.token_env),
                          endpoint_.timeout);
  net::check_status(r, "NLI train");
  try {
    return json::parse(r.body).at("model_id").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("NLI train: malformed response: {}", e.what()), false);
  }
}

std::vector<EntailmentLabel> HttpNliService::predict(const std::string& model_id,
                                                     std::span<const EntailmentPair> pairs) {
  json ps = json::array();
  for (const auto& p : pairs) ps.push_back(pair_json(p));
  json body = {{"model_id", model_id}, {"pairs", std::move(ps)}};
  auto r = net::post_json(endpoint_.base_url, "/predict", body.dump(), token_header(endpoint_.token_env),
                          endpoint_.timeout);
  net::check_status(r, "NLI predict");
  std::vector<EntailmentLabel> out;
  try {
    const json doc = json::parse(r.body);
    for (const json& l : doc.at("labels")) {
      int v = l.is_object() ? l.at("label").get<int>() : l.get<int>();
      if (v != 0 && v != 1) throw BackendError(fmt::format("NLI predict: non-binary label {}", v), false);
      out.push_back(from_bool(v == 1));
    }
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("NLI predict: malformed response: {}", e.what()), false);
  }
  if (out.size() != pairs.size())
    throw BackendError(fmt::format("NLI predict: {} labels for {} pairs", out.size(), pairs.size()), false);
  return out;
}

// --- Leave-one-out -----------------------------------------------------------

std::vector<LooFold> build_loo_folds(const corpus::Dataset& dataset,
                                     const std::map<std::string, ImpactSet>& refined_sets) {
  if (!dataset.has_gold()) throw DataError("leave-one-out needs gold impact sets");
  for (const auto& c : dataset.rationales())
    if (!refined_sets.contains(c.id)) throw DataError(fmt::format("no refined impact set for {}", c.id));

  // Pairs for every rationale, built once.
  std::vector<std::vector<LabeledPair>> pairs_by_rationale;
  for (const auto& c : dataset.rationales()) {
    const auto& gold = dataset.gold_for(c.id);
    std::vector<LabeledPair> pairs;
    for (const auto& cand : refined_sets.at(c.id)) {
      pairs.push_back({c.id, cand.req_id, make_pair(c, dataset.requirement(cand.req_id), cand.justification),
                       from_bool(gold.contains(cand.req_id))});
    }
    pairs_by_rationale.push_back(std::move(pairs));
  }

  std::vector<LooFold> folds;
  const auto& rationales = dataset.rationales();
  for (std::size_t held = 0; held < rationales.size(); ++held) {
    LooFold fold;
    fold.held_out = rationales[held].id;
    for (std::size_t i = 0; i < rationales.size(); ++i) {
      if (i == held) continue;
      fold.train.insert(fold.train.end(), pairs_by_rationale[i].begin(), pairs_by_rationale[i].end());
    }
    fold.test = pairs_by_rationale[held];
    folds.push_back(std::move(fold));
  }
  return folds;
}

LabelMap run_loo(std::span<const LooFold> folds, NliService& service, const TrainHyperparams& hp) {
  LabelMap out;
  for (const auto& fold : folds) {
    if (fold.test.empty()) continue;
    std::string model_id;
    std::vector<EntailmentLabel> labels;
    try {
      model_id = service.train(fold.train, hp);
      std::vector<EntailmentPair> pairs;
      pairs.reserve(fold.test.size());
      for (const auto& t : fold.test) pairs.push_back(t.pair);
      labels = service.predict(model_id, pairs);
    } catch (const BackendError& e) {
      throw BackendError(fmt::format("fold {}: {}", fold.held_out, e.what()), e.transient(), e.status());
    }
    if (labels.size() != fold.test.size())
      throw BackendError(fmt::format("fold {}: {} labels for {} pairs", fold.held_out, labels.size(), fold.test.size()),
                         false);
    for (std::size_t i = 0; i < labels.size(); ++i)
      out[{fold.test[i].rationale_id, fold.test[i].req_id}] = labels[i];
  }
  return out;
}

std::vector<EntailmentLabel> BackendLabelSource::labels(const corpus::ChangeRationale& rationale,
                                                        const ImpactSet& candidates, const corpus::Dataset& dataset) {
  std::vector<EntailmentPair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& c : candidates) pairs.push_back(make_pair(rationale, dataset.requirement(c.req_id), c.justification));
  auto labels = backend_.predict(pairs);
  if (labels.size() != pairs.size())
    throw BackendError(fmt::format("entailment backend returned {} labels for {} pairs", labels.size(), pairs.size()),
                       false);
  return labels;
}

std::vector<EntailmentLabel> PrecomputedLabelSource::labels(const corpus::ChangeRationale& rationale,
                                                            const ImpactSet& candidates, const corpus::Dataset&) {
  std::vector<EntailmentLabel> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    auto it = labels_.find({rationale.id, c.req_id});
    if (it == labels_.end())
      throw DataError(fmt::format("no entailment label for ({}, {})", rationale.id, c.req_id));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace proreficia::entailment
