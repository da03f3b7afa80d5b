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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace proreficia::corpus {

enum class ChangeCategory { Addition, Deletion, Modification };

std::string_view to_string(ChangeCategory c);
std::optional<ChangeCategory> parse_category(std::string_view s);

struct Requirement {
  std::string id;
  std::string text;

  friend bool operator==(const Requirement&, const Requirement&) = default;
};

struct ChangeRationale {
  std::string id;
  std::string text;
  std::optional<ChangeCategory> category;

  friend bool operator==(const ChangeRationale&, const ChangeRationale&) = default;
};

struct GoldImpact {
  std::string rationale_id;
  std::set<std::string> impacted_ids;

  friend bool operator==(const GoldImpact&, const GoldImpact&) = default;
};

/// A validated requirements corpus with its change rationales and, when
/// available, the gold impact sets.
///
/// Requirement order is the file order and defines the order in which the
/// requirements are listed in prompts. Instances are immutable once built;
/// the constructor enforces every invariant and throws DataError naming the
/// first offending record.
class Dataset {
 public:
  Dataset(std::string name, std::vector<Requirement> requirements,
          std::vector<ChangeRationale> rationales,
          std::optional<std::vector<GoldImpact>> gold = std::nullopt,
          std::optional<std::string> domain = std::nullopt);

  const std::string& name() const { return name_; }
  /// Domain string substituted into the domain-context prompt detail.
  /// Falls back to the dataset name when the document has no `domain`.
  const std::string& domain() const { return domain_.has_value() ? *domain_ : name_; }
  const std::optional<std::string>& declared_domain() const { return domain_; }

  const std::vector<Requirement>& requirements() const { return requirements_; }
  const std::vector<ChangeRationale>& rationales() const { return rationales_; }
  const std::optional<std::vector<GoldImpact>>& gold() const { return gold_; }
  bool has_gold() const { return gold_.has_value(); }

  std::size_t requirement_count() const { return requirements_.size(); }
  std::size_t rationale_count() const { return rationales_.size(); }

  bool has_requirement(std::string_view id) const;
  const Requirement& requirement(std::string_view id) const;
  const ChangeRationale& rationale(std::string_view id) const;
  /// Position of the requirement in dataset order.
  std::size_t requirement_index(std::string_view id) const;

  /// Gold set for a rationale; empty when the rationale has no gold entry.
  /// Throws DataError when the dataset carries no gold at all.
  const std::set<std::string>& gold_for(std::string_view rationale_id) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.name_ == b.name_ && a.domain_ == b.domain_ && a.requirements_ == b.requirements_ &&
           a.rationales_ == b.rationales_ && a.gold_ == b.gold_;
  }

 private:
  std::string name_;
  std::optional<std::string> domain_;
  std::vector<Requirement> requirements_;
  std::vector<ChangeRationale> rationales_;
  std::optional<std::vector<GoldImpact>> gold_;
  std::unordered_map<std::string, std::size_t> req_index_;
  std::unordered_map<std::string, std::size_t> rationale_index_;
  std::unordered_map<std::string, std::size_t> gold_index_;
};

/// Parses a dataset document. `source` only labels error messages.
Dataset parse_dataset(std::string_view json_text, std::string_view source = "<memory>");

/// Loads a dataset document from disk. A directory path resolves to its
/// `dataset.json`.
Dataset load_dataset(const std::filesystem::path& path);

std::filesystem::path resolve_dataset_path(const std::filesystem::path& path);

/// Pretty-printed dataset document, field names as in the schema.
std::string serialize_dataset(const Dataset& dataset);

struct GoldStats {
  std::size_t impacted_count = 0;
  std::size_t requirement_count = 0;
  double impacted_fraction = 0.0;
};

/// Size of the union of all gold sets relative to the corpus size.
GoldStats gold_stats(const Dataset& dataset);

}  // namespace proreficia::corpus
