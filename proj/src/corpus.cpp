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

#include "proreficia/corpus.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "proreficia/error.hpp"
#include "proreficia/text.hpp"

namespace proreficia::corpus {

using nlohmann::json;

std::string_view to_string(ChangeCategory c) {
  switch (c) {
    case ChangeCategory::Addition: return "Addition";
    case ChangeCategory::Deletion: return "Deletion";
    case ChangeCategory::Modification: return "Modification";
  }
  return "Modification";
}

std::optional<ChangeCategory> parse_category(std::string_view s) {
  if (s == "Addition") return ChangeCategory::Addition;
  if (s == "Deletion") return ChangeCategory::Deletion;
  if (s == "Modification") return ChangeCategory::Modification;
  return std::nullopt;
}

Dataset::Dataset(std::string name, std::vector<Requirement> requirements,
                 std::vector<ChangeRationale> rationales,
                 std::optional<std::vector<GoldImpact>> gold, std::optional<std::string> domain)
    : name_(std::move(name)),
      domain_(std::move(domain)),
      requirements_(std::move(requirements)),
      rationales_(std::move(rationales)),
      gold_(std::move(gold)) {
  for (std::size_t i = 0; i < requirements_.size(); ++i) {
    auto& r = requirements_[i];
    r.id = std::string(text::trim(r.id));
    r.text = std::string(text::trim(r.text));
    if (r.id.empty()) throw DataError(fmt::format("requirement #{} has an empty id", i + 1));
    if (r.text.empty()) throw DataError(fmt::format("requirement {} has empty text", r.id));
    if (!req_index_.emplace(r.id, i).second)
      throw DataError(fmt::format("duplicate requirement id {}", r.id));
  }
  for (std::size_t i = 0; i < rationales_.size(); ++i) {
    auto& c = rationales_[i];
    c.id = std::string(text::trim(c.id));
    c.text = std::string(text::trim(c.text));
    if (c.id.empty()) throw DataError(fmt::format("change rationale #{} has an empty id", i + 1));
    if (c.text.empty()) throw DataError(fmt::format("change rationale {} has empty text", c.id));
    if (!rationale_index_.emplace(c.id, i).second)
      throw DataError(fmt::format("duplicate change rationale id {}", c.id));
  }
  if (gold_) {
    for (std::size_t i = 0; i < gold_->size(); ++i) {
      const auto& g = (*gold_)[i];
      if (!rationale_index_.contains(g.rationale_id))
        throw DataError(fmt::format("gold entry references unknown change rationale {}", g.rationale_id));
      if (!gold_index_.emplace(g.rationale_id, i).second)
        throw DataError(fmt::format("duplicate gold entry for change rationale {}", g.rationale_id));
      for (const auto& id : g.impacted_ids) {
        if (!req_index_.contains(id))
          throw DataError(fmt::format("gold entry for {} references unknown requirement {}", g.rationale_id, id));
      }
    }
  }
}

bool Dataset::has_requirement(std::string_view id) const {
  return req_index_.contains(std::string(id));
}

const Requirement& Dataset::requirement(std::string_view id) const {
  return requirements_[requirement_index(id)];
}

std::size_t Dataset::requirement_index(std::string_view id) const {
  auto it = req_index_.find(std::string(id));
  if (it == req_index_.end()) throw DataError(fmt::format("unknown requirement {}", id));
  return it->second;
}

const ChangeRationale& Dataset::rationale(std::string_view id) const {
  auto it = rationale_index_.find(std::string(id));
  if (it == rationale_index_.end()) throw DataError(fmt::format("unknown change rationale {}", id));
  return rationales_[it->second];
}

const std::set<std::string>& Dataset::gold_for(std::string_view rationale_id) const {
  static const std::set<std::string> kEmpty;
  if (!gold_) throw DataError(fmt::format("dataset {} has no gold impact sets", name_));
  auto it = gold_index_.find(std::string(rationale_id));
  if (it == gold_index_.end()) {
    if (!rationale_index_.contains(std::string(rationale_id)))
      throw DataError(fmt::format("unknown change rationale {}", rationale_id));
    return kEmpty;
  }
  return (*gold_)[it->second].impacted_ids;
}

namespace {

std::string require_string(const json& obj, const char* field, std::string_view where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string())
    throw DataError(fmt::format("{}: missing or non-string field '{}'", where, field));
  return it->get<std::string>();
}

const json& require_array(const json& obj, const char* field, std::string_view where) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_array())
    throw DataError(fmt::format("{}: missing or non-array field '{}'", where, field));
  return *it;
}

}  // namespace

Dataset parse_dataset(std::string_view json_text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: parse error: {}", source, e.what()));
  }
  if (!doc.is_object()) throw DataError(fmt::format("{}: top level must be an object", source));

  std::string name = require_string(doc, "name", source);
  std::optional<std::string> domain;
  if (auto it = doc.find("domain"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError(fmt::format("{}: 'domain' must be a string", source));
    domain = it->get<std::string>();
  }

  std::vector<Requirement> reqs;
  const json& req_array = require_array(doc, "requirements", source);
  for (std::size_t i = 0; i < req_array.size(); ++i) {
    const json& r = req_array[i];
    auto where = fmt::format("{}: requirements[{}]", source, i);
    if (!r.is_object()) throw DataError(where + ": expected an object");
    reqs.push_back({require_string(r, "id", where), require_string(r, "text", where)});
  }

  std::vector<ChangeRationale> rationales;
  const json& cr_array = require_array(doc, "change_rationales", source);
  for (std::size_t i = 0; i < cr_array.size(); ++i) {
    const json& c = cr_array[i];
    auto where = fmt::format("{}: change_rationales[{}]", source, i);
    if (!c.is_object()) throw DataError(where + ": expected an object");
    ChangeRationale cr{require_string(c, "id", where), require_string(c, "text", where), std::nullopt};
    if (auto it = c.find("category"); it != c.end() && !it->is_null()) {
      auto parsed = it->is_string() ? parse_category(it->get<std::string>()) : std::nullopt;
      if (!parsed)
        throw DataError(fmt::format("{} ({}): category must be Addition, Deletion or Modification", where, cr.id));
      cr.category = parsed;
    }
    rationales.push_back(std::move(cr));
  }

  std::optional<std::vector<GoldImpact>> gold;
  if (auto it = doc.find("gold"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError(fmt::format("{}: 'gold' must be an array", source));
    gold.emplace();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& g = (*it)[i];
      auto where = fmt::format("{}: gold[{}]", source, i);
      if (!g.is_object()) throw DataError(where + ": expected an object");
      GoldImpact entry{require_string(g, "rationale_id", where), {}};
      for (const json& id : require_array(g, "impacted_ids", where)) {
        if (!id.is_string()) throw DataError(where + ": impacted_ids must be strings");
        entry.impacted_ids.insert(std::string(text::trim(id.get<std::string>())));
      }
      gold->push_back(std::move(entry));
    }
  }

  try {
    return Dataset(std::move(name), std::move(reqs), std::move(rationales), std::move(gold),
                   std::move(domain));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", source, e.what()));
  }
}

std::filesystem::path resolve_dataset_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / "dataset.json";
  return path;
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto file = resolve_dataset_path(path);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open dataset {}", file.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), file.string());
}

std::string serialize_dataset(const Dataset& dataset) {
  json doc = json::object();
  doc["name"] = dataset.name();
  if (dataset.declared_domain()) doc["domain"] = *dataset.declared_domain();
  json reqs = json::array();
  for (const auto& r : dataset.requirements()) reqs.push_back({{"id", r.id}, {"text", r.text}});
  doc["requirements"] = std::move(reqs);
  json crs = json::array();
  for (const auto& c : dataset.rationales()) {
    json entry = {{"id", c.id}, {"text", c.text}};
    if (c.category) entry["category"] = std::string(to_string(*c.category));
    crs.push_back(std::move(entry));
  }
  doc["change_rationales"] = std::move(crs);
  if (dataset.gold()) {
    json gold = json::array();
    for (const auto& g : *dataset.gold())
      gold.push_back({{"rationale_id", g.rationale_id}, {"impacted_ids", g.impacted_ids}});
    doc["gold"] = std::move(gold);
  }
  return doc.dump(2) + "\n";
}

GoldStats gold_stats(const Dataset& dataset) {
  if (!dataset.has_gold()) throw DataError(fmt::format("dataset {} has no gold impact sets", dataset.name()));
  std::set<std::string> all;
  for (const auto& g : *dataset.gold()) all.insert(g.impacted_ids.begin(), g.impacted_ids.end());
  GoldStats stats;
  stats.impacted_count = all.size();
  stats.requirement_count = dataset.requirement_count();
  stats.impacted_fraction = stats.requirement_count == 0
                                ? 0.0
                                : static_cast<double>(all.size()) / static_cast<double>(stats.requirement_count);
  return stats;
}

}  // namespace proreficia::corpus
