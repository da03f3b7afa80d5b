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

// Regenerates the demo replay store and expected artifacts from scripted
// model answers:
//
//   make_demo_replay <demo dir> <templates dir>
//
// Writes <demo dir>/replay/*.txt and <demo dir>/expected/<rationale>/...

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "proreficia/corpus.hpp"
#include "proreficia/entailment.hpp"
#include "proreficia/llmclient.hpp"
#include "proreficia/pipeline.hpp"
#include "proreficia/promptkit.hpp"
#include "proreficia/text.hpp"

namespace fs = std::filesystem;
using namespace proreficia;

namespace {

struct Script {
  std::string initial;
  std::string refinement;
  std::string ranking;
};

const std::map<std::string, Script>& scripts() {
  static const std::map<std::string, Script> s = {
      {"C1",
       {"impacted ReqID: REQ1 justification: The polling of devices relies on SNMP, which is being replaced.\n"
        "**impacted ReqID:** REQ2, justification: Configuration is pushed through SNMP set operations.\n"
        "impacted ReqID: REQ4 justification: The station exposes an SNMP agent.\n"
        "impacted ReqID: REQ7 justification: Alarms originate from device monitoring.\n"
        "impacted ReqID: REQ99 justification: Not a real requirement.\n"
        "impacted ReqID: REQ9 justification: A single management interface becomes the SDN controller.\n",
        "impacted ReqID: REQ3 justification: Monitoring of ground network devices and rerouting move from SNMP "
        "to management through the SDN controller.\n"
        "impacted reqid: req8 justification: Device statistics are gathered by the monitoring that changes.\n",
        "Reasoning: SNMP polling and configuration are replaced directly.\n"
        "Sorted_List: REQ1, REQ2, REQ9, REQ3, REQ8, REQ7, REQ4\n"}},
      {"C2",
       {"impacted ReqID: REQ5 justification: Telecommand encoding cites Ref-D1.\n",
        "impacted ReqID: REQ11 justification: The archive format is specified in Ref-D1 annex B.\n",
        "Sorted_List: REQ5, REQ11\n"}},
      {"C3",
       {"impacted ReqID: REQ6 justification: Separation sequencing exists only for the dual launch.\n"
        "impacted ReqID: REQ10 justification: Early orbit procedures cover each launched spacecraft.\n",
        "No further requirements are impacted.\n",
        "Sorted_List:\nREQ10\nREQ6\n"}},
  };
  return s;
}

std::string answer(const corpus::Dataset& ds, const llm::ChatRequest& req) {
  std::string rationale;
  for (const auto& c : ds.rationales())
    if (req.prompt.find("Change Rationale: " + c.text) != std::string::npos) rationale = c.id;
  const auto& script = scripts().at(rationale);
  if (req.prompt.starts_with(prompt::kRankingInstruction)) return script.ranking;
  std::size_t listed = 0;
  for (const auto& r : ds.requirements())
    if (req.prompt.find("\n" + r.id + ": ") != std::string::npos) ++listed;
  return listed == ds.requirement_count() ? script.initial : script.refinement;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_demo_replay <demo dir> <templates dir>\n";
    return 1;
  }
  const fs::path demo = argv[1];
  auto ds = corpus::load_dataset(demo);
  auto catalog = prompt::DetailTextCatalog::load(argv[2]);
  fs::remove_all(demo / "replay");
  auto store = std::make_shared<llm::ReplayStore>(demo / "replay");
  auto live = std::make_shared<llm::CallbackChatBackend>([&](const llm::ChatRequest& r) { return answer(ds, r); });
  llm::ReplayBackend backend(store, llm::ReplayMode::Record, live);

  pipeline::PipelineConfig cfg;
  pipeline::StageContext ctx{ds, catalog, backend, cfg};
  entailment::LexicalEntailment lexical;
  entailment::BackendLabelSource labels(lexical);
  fs::remove_all(demo / "expected");
  for (const auto& r : pipeline::run_all(ctx, &labels)) {
    pipeline::write_artifacts(demo / "expected", r);
    std::cout << r.rationale_id << ": " << text::join(r.final_set.ids(), ",") << "\n";
  }
  return 0;
}
