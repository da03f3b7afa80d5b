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
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace proreficia {

enum class CandidateOrigin { Initial, Refinement };

std::string_view to_string(CandidateOrigin o);

/// A requirement proposed as impacted, with the model's justification.
struct ImpactCandidate {
  std::string req_id;
  std::string justification;
  CandidateOrigin origin = CandidateOrigin::Initial;

  friend bool operator==(const ImpactCandidate&, const ImpactCandidate&) = default;
};

/// Ordered collection of candidates without duplicate requirement ids.
/// Order is discovery order until the ranking stage reorders it.
class ImpactSet {
 public:
  ImpactSet() = default;

  /// Appends unless the id is already present; returns whether it was added.
  bool add(ImpactCandidate candidate);

  bool contains(std::string_view req_id) const { return ids_.contains(std::string(req_id)); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  const std::vector<ImpactCandidate>& items() const { return items_; }
  const ImpactCandidate& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::vector<std::string> ids() const;
  std::set<std::string> id_set() const { return {ids_.begin(), ids_.end()}; }

  friend bool operator==(const ImpactSet& a, const ImpactSet& b) { return a.items_ == b.items_; }

 private:
  std::vector<ImpactCandidate> items_;
  std::unordered_set<std::string> ids_;
};

}  // namespace proreficia
