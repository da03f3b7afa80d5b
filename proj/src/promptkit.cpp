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

#include "proreficia/promptkit.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "proreficia/error.hpp"
#include "proreficia/text.hpp"

namespace proreficia::prompt {

namespace {

constexpr std::uint8_t kCoreBit = 1u << static_cast<int>(Detail::CoreDirective);

const std::vector<PromptSpec>& catalog_of_variants() {
  static const std::vector<PromptSpec> variants = enumerate_prompts();
  return variants;
}

void append_requirement_block(std::string& out, const corpus::ChangeRationale& rationale,
                              std::span<const corpus::Requirement> reqs) {
  out += "Change Rationale: ";
  out += rationale.text;
  out += "\n\nRequirements List:\n";
  for (const auto& r : reqs) {
    out += r.id;
    out += ": ";
    out += text::flatten_line(r.text);
    out += '\n';
  }
}

}  // namespace

std::vector<PromptSpec> enumerate_prompts() {
  std::vector<PromptSpec> out;
  out.reserve(64);
  // Subsets of a 6-element list of size k in lexicographic order come from
  // walking index combinations; ordering by k first gives the catalog order.
  constexpr int n = static_cast<int>(kOptionalDetails.size());
  for (int k = 0; k <= n; ++k) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::uint8_t mask = kCoreBit;
      for (int i : idx) mask |= static_cast<std::uint8_t>(1u << static_cast<int>(kOptionalDetails[i]));
      int index = static_cast<int>(out.size()) + 1;
      out.push_back(PromptSpec(fmt::format("P{}", index), index, mask));
      int pos = k - 1;
      while (pos >= 0 && idx[pos] == n - k + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

PromptSpec PromptSpec::from_id(std::string_view id) {
  std::string_view t = text::trim(id);
  if (t.size() >= 2 && (t[0] == 'P' || t[0] == 'p')) {
    int n = 0;
    bool ok = true;
    for (char c : t.substr(1)) {
      if (c < '0' || c > '9') {
        ok = false;
        break;
      }
      n = n * 10 + (c - '0');
      if (n > 64) break;
    }
    if (ok && n >= 1 && n <= 64) return catalog_of_variants()[n - 1];
  }
  throw DataError(fmt::format("unknown prompt id '{}' (expected P1..P64)", id));
}

PromptSpec PromptSpec::from_details(std::span<const int> details) {
  std::uint8_t mask = kCoreBit;
  for (int d : details) {
    if (d < 1 || d > 7) throw DataError(fmt::format("prompt detail {} out of range 1..7", d));
    mask |= static_cast<std::uint8_t>(1u << d);
  }
  for (const auto& spec : catalog_of_variants())
    if (spec.mask_ == mask) return spec;
  throw DataError("no prompt variant for detail set");  // unreachable: all 64 masks exist
}

std::vector<int> PromptSpec::details() const {
  std::vector<int> out;
  for (int d = 1; d <= 7; ++d)
    if ((mask_ >> d) & 1u) out.push_back(d);
  return out;
}

std::string PromptSpec::combination() const {
  std::string out;
  for (int d : details()) out.push_back(static_cast<char>('0' + d));
  return out;
}

std::size_t PromptSpec::cardinality() const { return details().size(); }

DetailTextCatalog::DetailTextCatalog(std::array<std::string, 7> details, std::string output_format)
    : details_(std::move(details)), output_format_(std::move(output_format)) {
  for (std::size_t i = 0; i < details_.size(); ++i)
    if (text::trim(details_[i]).empty())
      throw DataError(fmt::format("template for detail {} is empty", i + 1));
  if (output_format_.find(kOutputDirective) == std::string::npos)
    throw DataError(fmt::format("output-format template must contain \"{}\"", kOutputDirective));
}

std::string read_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open template {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string s = buf.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

DetailTextCatalog DetailTextCatalog::load(const std::filesystem::path& dir) {
  std::array<std::string, 7> details;
  for (int d = 1; d <= 7; ++d) details[d - 1] = read_template(dir / fmt::format("detail_{}.txt", d));
  return DetailTextCatalog(std::move(details), read_template(dir / "output_format.txt"));
}

std::string DetailTextCatalog::render_detail(Detail d, std::string_view domain) const {
  return text::replace_all(raw_detail(d), "{domain}", domain);
}

std::string render_cag_prompt(const PromptSpec& spec, const corpus::ChangeRationale& rationale,
                              std::span<const corpus::Requirement> reqs,
                              const DetailTextCatalog& catalog, std::string_view domain) {
  if (reqs.empty()) throw DataError("cannot render an impact prompt over an empty requirement list");
  std::string out;
  // Role, then instructions, then context: ascending detail number.
  for (int d : spec.details()) {
    out += catalog.render_detail(static_cast<Detail>(d), domain);
    out += "\n\n";
  }
  append_requirement_block(out, rationale, reqs);
  out += '\n';
  out += catalog.output_format();
  out += '\n';
  return out;
}

std::string render_refinement_prompt(const PromptSpec& spec, const corpus::ChangeRationale& rationale,
                                     std::span<const corpus::Requirement> complement,
                                     const DetailTextCatalog& catalog, std::string_view domain) {
  if (complement.empty()) throw DataError("nothing to refine: every requirement was already selected");
  return render_cag_prompt(spec, rationale, complement, catalog, domain);
}

const std::string_view kRankingInstruction =
    "You are an analyst in the field of requirements engineering. I will provide a change rationale, "
    "its corresponding impact set, and justification for selection. Rank the requirements in the "
    "impact set according to the strength of their relationship to the change rationale, based on "
    "the content of the requirement texts and the provided justifications for their selection.";

std::string render_ranking_prompt(const corpus::ChangeRationale& rationale,
                                  std::span<const ImpactCandidate> candidates,
                                  const RequirementText& requirement_text) {
  if (candidates.empty()) throw DataError("cannot rank an empty impact set");
  std::vector<std::string> ids;
  ids.reserve(candidates.size());
  for (const auto& c : candidates) ids.push_back(c.req_id);

  std::string out(kRankingInstruction);
  out += "\nOutput format: Sorted_List: <req_ids>\n";
  out += "Change Rationale: ";
  out += rationale.text;
  out += "\nImpacted Requirements: ";
  out += text::join(ids, ", ");
  out += "\nJustification:\n";
  for (const auto& c : candidates) {
    out += c.req_id;
    out += ": ";
    if (requirement_text) {
      out += text::flatten_line(requirement_text(c.req_id));
      out += " (justification: ";
      out += text::flatten_line(c.justification);
      out += ")";
    } else {
      out += text::flatten_line(c.justification);
    }
    out += '\n';
  }
  return out;
}

}  // namespace proreficia::prompt
