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

#include "proreficia/impact.hpp"

namespace proreficia {

std::string_view to_string(CandidateOrigin o) {
  return o == CandidateOrigin::Initial ? "initial" : "refinement";
}

bool ImpactSet::add(ImpactCandidate candidate) {
  if (!ids_.insert(candidate.req_id).second) return false;
  items_.push_back(std::move(candidate));
  return true;
}

std::vector<std::string> ImpactSet::ids() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& c : items_) out.push_back(c.req_id);
  return out;
}

}  // namespace proreficia
