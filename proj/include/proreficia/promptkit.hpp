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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proreficia/corpus.hpp"
#include "proreficia/impact.hpp"

namespace proreficia::prompt {

/// The seven prompt details. Numbering follows the detail catalog; only the
/// core directive is mandatory.
enum class Detail : int {
  Role = 1,
  CoreDirective = 2,
  Commonsense = 3,
  KeywordRelations = 4,
  TaskContext = 5,
  RationaleContext = 6,
  DomainContext = 7,
};

inline constexpr std::array<Detail, 6> kOptionalDetails{
    Detail::Role,        Detail::Commonsense,      Detail::KeywordRelations,
    Detail::TaskContext, Detail::RationaleContext, Detail::DomainContext};

/// Output directive every impact prompt ends with; the impact parser keys
/// on this shape.
inline constexpr std::string_view kOutputDirective = "impacted ReqID: <ID> justification: <text>";

/// One of the 64 prompt variants: the core directive plus a subset of the
/// optional details.
class PromptSpec {
 public:
  /// Looks up a variant by its canonical id ("P1".."P64").
  static PromptSpec from_id(std::string_view id);
  /// Canonical variant for a set of detail numbers; 2 is implied.
  static PromptSpec from_details(std::span<const int> details);

  const std::string& id() const { return id_; }
  int index() const { return index_; }
  bool has(Detail d) const { return (mask_ >> static_cast<int>(d)) & 1u; }
  /// Detail numbers in ascending order, 2 included.
  std::vector<int> details() const;
  /// Compact digit string, e.g. "1256" for P30.
  std::string combination() const;
  std::size_t cardinality() const;

  friend bool operator==(const PromptSpec& a, const PromptSpec& b) { return a.mask_ == b.mask_; }

 private:
  friend std::vector<PromptSpec> enumerate_prompts();
  PromptSpec(std::string id, int index, std::uint8_t mask) : id_(std::move(id)), index_(index), mask_(mask) {}

  std::string id_;
  int index_ = 0;
  std::uint8_t mask_ = 0;  // bit d set when detail d is present
};

/// All 64 variants: subsets of the optional details ordered by size, then
/// lexicographically by detail number, numbered P1..P64 in that order.
std::vector<PromptSpec> enumerate_prompts();

/// Detail templates plus the output-format directive, loaded from a
/// templates directory (`detail_<n>.txt`, `output_format.txt`).
class DetailTextCatalog {
 public:
  DetailTextCatalog(std::array<std::string, 7> details, std::string output_format);

  static DetailTextCatalog load(const std::filesystem::path& dir);

  /// Template for a detail with `{domain}` substituted.
  std::string render_detail(Detail d, std::string_view domain) const;
  const std::string& raw_detail(Detail d) const { return details_[static_cast<int>(d) - 1]; }
  const std::string& output_format() const { return output_format_; }

 private:
  std::array<std::string, 7> details_;
  std::string output_format_;
};

/// Reads a whole template file with trailing whitespace removed.
std::string read_template(const std::filesystem::path& path);

/// Impact prompt over `reqs`, listed one "ID: text" per line in the order
/// given. Throws DataError on an empty list.
std::string render_cag_prompt(const PromptSpec& spec, const corpus::ChangeRationale& rationale,
                              std::span<const corpus::Requirement> reqs,
                              const DetailTextCatalog& catalog, std::string_view domain);

/// Same template as the impact prompt, over the requirements not selected
/// by the first pass. Throws DataError("nothing to refine") when empty.
std::string render_refinement_prompt(const PromptSpec& spec, const corpus::ChangeRationale& rationale,
                                     std::span<const corpus::Requirement> complement,
                                     const DetailTextCatalog& catalog, std::string_view domain);

/// Maps a requirement id to its text; used to show the analyst-facing
/// requirement text next to each justification.
using RequirementText = std::function<std::string(std::string_view)>;

/// Ranking prompt over a non-empty impact set. Justifications are
/// flattened to one line.
std::string render_ranking_prompt(const corpus::ChangeRationale& rationale,
                                  std::span<const ImpactCandidate> candidates,
                                  const RequirementText& requirement_text = {});

/// Fixed ranking instruction text.
extern const std::string_view kRankingInstruction;

}  // namespace proreficia::prompt
