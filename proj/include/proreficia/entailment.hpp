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
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proreficia/corpus.hpp"
#include "proreficia/impact.hpp"

namespace proreficia::entailment {

enum class EntailmentLabel : std::uint8_t { NotEntailed = 0, Entailed = 1 };

inline int to_int(EntailmentLabel l) { return static_cast<int>(l); }
inline EntailmentLabel from_bool(bool b) { return b ? EntailmentLabel::Entailed : EntailmentLabel::NotEntailed; }

/// Premise/hypothesis pair for the filter. The candidate side (requirement
/// text plus the model's justification) is the premise; the rationale is
/// the hypothesis.
struct EntailmentPair {
  std::string rationale_text;
  std::string candidate_text;

  friend bool operator==(const EntailmentPair&, const EntailmentPair&) = default;
};

EntailmentPair make_pair(const corpus::ChangeRationale& rationale, const corpus::Requirement& requirement,
                         std::string_view justification);

class EntailmentBackend {
 public:
  virtual ~EntailmentBackend() = default;
  /// One label per pair, same order.
  virtual std::vector<EntailmentLabel> predict(std::span<const EntailmentPair> pairs) = 0;
};

enum class OverlapMeasure {
  Jaccard,             // |P ∩ H| / |P ∪ H|
  HypothesisCoverage,  // |P ∩ H| / |H|
};

/// Content tokens: lowercased alphanumeric runs minus a short stop-list.
std::set<std::string> content_tokens(std::string_view text);

/// Token-overlap stand-in for the NLI model. Deterministic and offline;
/// no claim of semantic quality.
class LexicalEntailment : public EntailmentBackend {
 public:
  explicit LexicalEntailment(double threshold = 0.2, OverlapMeasure measure = OverlapMeasure::Jaccard);

  static double overlap(std::string_view premise, std::string_view hypothesis, OverlapMeasure measure);
  EntailmentLabel label(const EntailmentPair& pair) const;
  std::vector<EntailmentLabel> predict(std::span<const EntailmentPair> pairs) override;

  double threshold() const { return threshold_; }

 private:
  double threshold_;
  OverlapMeasure measure_;
};

// --- NLI service client ------------------------------------------------------

struct TrainHyperparams {
  int epochs = 100;
  double weight_decay = 1e-3;
  int train_batch = 10;
  double learning_rate = 2e-2;
  std::string best_metric = "recall";
  std::int64_t seed = 42;
};

struct LabeledPair {
  std::string rationale_id;
  std::string req_id;
  EntailmentPair pair;
  EntailmentLabel label = EntailmentLabel::NotEntailed;
};

/// Client side of the NLI service: health, per-fold training from fresh
/// weights, and prediction against a trained model handle.
class NliService {
 public:
  virtual ~NliService() = default;
  virtual bool health() = 0;
  /// Returns the model id of a freshly trained classifier.
  virtual std::string train(std::span<const LabeledPair> examples, const TrainHyperparams& hp) = 0;
  virtual std::vector<EntailmentLabel> predict(const std::string& model_id,
                                               std::span<const EntailmentPair> pairs) = 0;
};

struct NliEndpoint {
  std::string base_url;
  std::string token_env = "NLI_SERVICE_TOKEN";  // sent as X-Auth-Token when set
  std::chrono::seconds timeout{3600};
};

/// HTTP implementation: GET /health, POST /train, POST /predict.
class HttpNliService : public NliService {
 public:
  explicit HttpNliService(NliEndpoint endpoint);
  bool health() override;
  std::string train(std::span<const LabeledPair> examples, const TrainHyperparams& hp) override;
  std::vector<EntailmentLabel> predict(const std::string& model_id, std::span<const EntailmentPair> pairs) override;

 private:
  NliEndpoint endpoint_;
};

/// Predicts with an already trained service model.
class ServiceEntailment : public EntailmentBackend {
 public:
  ServiceEntailment(NliService& service, std::string model_id) : service_(service), model_id_(std::move(model_id)) {}
  std::vector<EntailmentLabel> predict(std::span<const EntailmentPair> pairs) override {
    return service_.predict(model_id_, pairs);
  }

 private:
  NliService& service_;
  std::string model_id_;
};

// --- Leave-one-out orchestration ---------------------------------------------

struct LooFold {
  std::string held_out;
  std::vector<LabeledPair> train;
  /// Held-out rationale's refined candidates; labels are unknown here.
  std::vector<LabeledPair> test;
};

/// One fold per rationale. Training pairs are every other rationale's
/// refined candidates, labelled 1 iff the candidate is in that rationale's
/// gold set. Throws DataError when gold or a refined set is missing.
std::vector<LooFold> build_loo_folds(const corpus::Dataset& dataset,
                                     const std::map<std::string, ImpactSet>& refined_sets);

using LabelKey = std::pair<std::string, std::string>;  // (rationale id, requirement id)
using LabelMap = std::map<LabelKey, EntailmentLabel>;

/// Trains a fresh model per fold and predicts only that fold's held-out
/// pairs. Folds with no test pairs are skipped entirely.
LabelMap run_loo(std::span<const LooFold> folds, NliService& service, const TrainHyperparams& hp);

// --- Label sources consumed by the selection stage ---------------------------

class LabelSource {
 public:
  virtual ~LabelSource() = default;
  /// Labels aligned with `candidates`.
  virtual std::vector<EntailmentLabel> labels(const corpus::ChangeRationale& rationale,
                                              const ImpactSet& candidates, const corpus::Dataset& dataset) = 0;
};

/// Builds pairs and asks an entailment backend.
class BackendLabelSource : public LabelSource {
 public:
  explicit BackendLabelSource(EntailmentBackend& backend) : backend_(backend) {}
  std::vector<EntailmentLabel> labels(const corpus::ChangeRationale& rationale, const ImpactSet& candidates,
                                      const corpus::Dataset& dataset) override;

 private:
  EntailmentBackend& backend_;
};

/// Serves labels computed ahead of time (e.g. by run_loo). A missing
/// (rationale, requirement) key is a DataError.
class PrecomputedLabelSource : public LabelSource {
 public:
  explicit PrecomputedLabelSource(LabelMap labels) : labels_(std::move(labels)) {}
  std::vector<EntailmentLabel> labels(const corpus::ChangeRationale& rationale, const ImpactSet& candidates,
                                      const corpus::Dataset& dataset) override;

 private:
  LabelMap labels_;
};

}  // namespace proreficia::entailment
