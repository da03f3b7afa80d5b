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

// Acceptance checks for the primary library. Prints one PASS/FAIL line per
// criterion and exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "proreficia/ablation.hpp"
#include "proreficia/baselines.hpp"
#include "proreficia/cli.hpp"
#include "proreficia/evalmetrics.hpp"
#include "proreficia/llmclient.hpp"
#include "proreficia/pipeline.hpp"
#include "proreficia/promptkit.hpp"
#include "test_support.hpp"

using namespace proreficia;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(std::string why) {
    if (ok) detail = std::move(why);
    ok = false;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(testing::slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

const char* kTables[] = {"table_wasp.csv", "table_satdlink.csv"};

// --- criteria ------------------------------------------------------------------

Outcome prompt_enumeration() {
  Outcome o;
  auto t0 = Clock::now();
  auto prompts = prompt::enumerate_prompts();
  const double elapsed = seconds_since(t0);
  for (const char* table : kTables) {
    auto rows = read_csv(testing::fixture_dir() / table);
    const auto pc = column(rows[0], "prompt"), cc = column(rows[0], "combination");
    if (rows.size() != 65 || prompts.size() != 64) {
      o.fail(fmt::format("{}: {} rows, {} prompts", table, rows.size() - 1, prompts.size()));
      continue;
    }
    for (std::size_t i = 0; i < 64; ++i) {
      if (rows[i + 1][pc] != prompts[i].id() || rows[i + 1][cc] != prompts[i].combination())
        o.fail(fmt::format("{} row {}: {} {} vs {} {}", table, i + 1, rows[i + 1][pc], rows[i + 1][cc],
                           prompts[i].id(), prompts[i].combination()));
    }
  }
  if (elapsed >= 1.0) o.fail(fmt::format("enumeration took {:.3f} s", elapsed));
  if (o.ok) o.detail = fmt::format("128 rows match, {:.2f} ms", elapsed * 1000);
  return o;
}

Outcome cutoff_golden() {
  Outcome o;
  auto rows = read_csv(testing::fixture_dir() / "worked_scores.csv");
  std::vector<baselines::ScoredRequirement> scores;
  for (std::size_t i = 1; i < rows.size(); ++i) scores.push_back({rows[i][0], std::stod(rows[i][1])});
  auto r = baselines::sort_ranking(scores);
  auto t2 = baselines::cutoff_t2(r);
  auto t3 = baselines::cutoff_t3(r);
  auto score_of = [&](const std::string& id) {
    for (const auto& s : r)
      if (s.req_id == id) return s.score;
    return -1.0;
  };
  if (t2.size() != 7 || score_of(t2.back()) != 0.57)
    o.fail(fmt::format("T2 kept {} ending at {}", t2.size(), t2.empty() ? -1.0 : score_of(t2.back())));
  if (t3.size() != 4 || score_of(t3.back()) != 0.78)
    o.fail(fmt::format("T3 kept {} ending at {}", t3.size(), t3.empty() ? -1.0 : score_of(t3.back())));
  if (o.ok) o.detail = "T2 keeps 7 (last 0.57), T3 keeps 4 (last 0.78)";
  return o;
}

Outcome metric_fidelity() {
  Outcome o;
  std::size_t checked = 0;
  auto check = [&](const std::string& where, double r, double p, double f2) {
    double got = eval::f2_score(p / 100.0, r / 100.0) * 100.0;
    ++checked;
    if (std::abs(got - f2) > 0.1 + 1e-9) o.fail(fmt::format("{}: R {} P {} printed {} recomputed {:.2f}", where, r, p, f2, got));
  };
  for (const char* table : kTables) {
    auto rows = read_csv(testing::fixture_dir() / table);
    const auto& h = rows[0];
    for (const char* model : {"gpt4o", "llama"}) {
      const auto rc = column(h, fmt::format("{}_r", model)), pc = column(h, fmt::format("{}_p", model)),
                 fc = column(h, fmt::format("{}_f2", model));
      for (std::size_t i = 1; i < rows.size(); ++i)
        check(fmt::format("{} {} {}", table, rows[i][0], model), std::stod(rows[i][rc]), std::stod(rows[i][pc]),
              std::stod(rows[i][fc]));
    }
  }
  check("DeepSeek P3", 90.9, 29.4, 64.1);
  check("GPT4o P1", 81.8, 85.7, 82.6);
  if (o.ok) o.detail = fmt::format("{} triples within 0.1 pp", checked);
  return o;
}

Outcome cost_fidelity() {
  Outcome o;
  auto stage = [](std::size_t tp, std::size_t fp, std::size_t n_c) {
    // Spread the totals over the rationales; cost only depends on the sums.
    std::vector<eval::ConfusionCounts> counts(n_c);
    for (std::size_t i = 0; i < tp; ++i) counts[i % n_c].tp++;
    for (std::size_t i = 0; i < fp; ++i) counts[(i + 1) % n_c].fp++;
    return counts;
  };
  struct Case {
    const char* name;
    std::size_t tp, fp, n_c, n_req;
    const char* printed;
    double tolerance_pp;
  };
  const Case cases[] = {{"WASP final", 19, 12, 5, 72, "8.6", 0.0},
                        {"SAT-DLink initial", 26, 12, 11, 192, "1.8", 0.0},
                        {"SAT-DLink refinement", 32, 51, 11, 192, "3.9", 0.0},
                        {"SAT-DLink final", 30, 17, 11, 192, "2.1", 0.15}};
  std::vector<std::string> notes;
  for (const auto& c : cases) {
    auto counts = stage(c.tp, c.fp, c.n_c);
    double value = eval::cost(counts, c.n_req);
    auto shown = eval::format_percent(value);
    if (c.tolerance_pp == 0.0) {
      if (shown != c.printed) o.fail(fmt::format("{}: {} vs printed {}", c.name, shown, c.printed));
    } else if (std::abs(value * 100.0 - std::stod(c.printed)) > c.tolerance_pp) {
      o.fail(fmt::format("{}: {:.3f} vs printed {} +- {}", c.name, value * 100.0, c.printed, c.tolerance_pp));
    }
    notes.push_back(fmt::format("{} {}", c.name, shown));
  }
  if (o.ok) o.detail = fmt::format("{}", fmt::join(notes, ", "));
  return o;
}

Outcome selection_properties() {
  Outcome o;
  std::mt19937 rng(1);
  for (int trial = 0; trial < 1000 && o.ok; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    ImpactSet ranked;
    std::vector<entailment::EntailmentLabel> labels;
    for (std::size_t i = 0; i < n; ++i) {
      ranked.add({fmt::format("R{}", i), "", CandidateOrigin::Initial});
      labels.push_back(entailment::from_bool(rng() % 2 == 0));
    }
    auto kept = pipeline::select(ranked, labels);
    if (n <= 5) {
      if (!(kept == ranked)) o.fail(fmt::format("n={} not identity", n));
      continue;
    }
    // Subset, order preserved.
    std::size_t j = 0;
    for (const auto& c : kept) {
      while (j < n && ranked[j].req_id != c.req_id) ++j;
      if (j == n) o.fail(fmt::format("n={} output not an ordered subset", n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const bool expected = i + 1 <= n / 2 || labels[i] == entailment::EntailmentLabel::Entailed;
      if (kept.contains(ranked[i].req_id) != expected) o.fail(fmt::format("n={} position {} wrong", n, i + 1));
    }
    // Monotone in labels.
    auto flipped = labels;
    std::size_t f = rng() % n;
    flipped[f] = entailment::EntailmentLabel::Entailed;
    auto more = pipeline::select(ranked, flipped);
    for (const auto& c : kept)
      if (!more.contains(c.req_id)) o.fail(fmt::format("n={} flipping {} removed {}", n, f + 1, c.req_id));
  }
  if (o.ok) o.detail = "1000 random cases";
  return o;
}

Outcome refinement_properties() {
  Outcome o;
  auto catalog = prompt::DetailTextCatalog::load(testing::template_dir());
  std::mt19937 rng(2);
  for (int trial = 0; trial < 500 && o.ok; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
    auto ds = testing::synthetic_dataset(n, 1, std::min<std::size_t>(n, 3), rng());
    std::set<std::string> first_pick, second_pick;
    for (const auto& r : ds.requirements()) {
      if (rng() % 3 == 0) first_pick.insert(r.id);
      if (rng() % 3 == 0) second_pick.insert(r.id);
    }
    int calls = 0;
    testing::RecordingBackend backend([&](const llm::ChatRequest& req) {
      auto listed = testing::listed_ids(req.prompt);
      const auto& pick = calls++ == 0 ? first_pick : second_pick;
      std::vector<std::string> hits;
      for (const auto& id : listed)
        if (pick.contains(id)) hits.push_back(id);
      return testing::impact_lines(hits);
    });
    pipeline::PipelineConfig cfg;
    pipeline::StageContext ctx{ds, catalog, backend, cfg};
    pipeline::RunTrace trace;
    const auto& cr = ds.rationales()[0];
    auto first = pipeline::initial_pass(cr, ctx, trace);
    auto refined = pipeline::refinement_pass(cr, first, ctx, trace);

    std::vector<std::string> complement;
    for (const auto& r : ds.requirements())
      if (!first.contains(r.id)) complement.push_back(r.id);
    auto requests = backend.requests();
    if (complement.empty()) {
      if (requests.size() != 1) o.fail(fmt::format("trial {}: refinement called with empty complement", trial));
    } else if (requests.size() != 2 || testing::listed_ids(requests[1].prompt) != complement) {
      o.fail(fmt::format("trial {}: second pass did not query the complement", trial));
    }
    std::set<std::string> expected = first.id_set();
    for (const auto& id : complement)
      if (second_pick.contains(id)) expected.insert(id);
    if (refined.id_set() != expected) o.fail(fmt::format("trial {}: refined set is not the union", trial));
    for (std::size_t i = 0; i < first.size(); ++i)
      if (!(refined[i] == first[i])) o.fail(fmt::format("trial {}: first-pass candidate changed", trial));
  }
  if (o.ok) o.detail = "500 random fixtures";
  return o;
}

Outcome end_to_end_replay() {
  Outcome o;
  const fs::path demo = testing::fixture_dir() / "demo";
  auto t0 = Clock::now();
  testing::TempDir dirs[2];
  for (auto& dir : dirs) {
    std::ostringstream out, err;
    int code = cli::dispatch({"run", "--dataset", demo.string(), "--prompt", "P30", "--replay", "strict", "--out",
                              dir.path().string()},
                             out, err);
    if (code != 0) o.fail(fmt::format("run exited {}: {}", code, err.str()));
  }
  const double elapsed = seconds_since(t0);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(demo / "expected")) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), demo / "expected");
    auto want = testing::slurp(entry.path());
    for (auto& dir : dirs)
      if (testing::slurp(dir.path() / rel) != want) o.fail(fmt::format("{} differs", rel.string()));
    ++files;
  }
  if (files == 0) o.fail("no expected artifacts found");
  if (elapsed >= 5.0) o.fail(fmt::format("two runs took {:.2f} s", elapsed));
  if (o.ok) o.detail = fmt::format("{} files identical in both runs, {:.2f} s", files, elapsed);
  return o;
}

Outcome gbdt_properties() {
  Outcome o;
  std::vector<std::string> combos;
  for (const auto& p : prompt::enumerate_prompts()) combos.push_back(p.combination());

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.2, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> y;
    for (std::size_t i = 0; i < combos.size(); ++i) y.push_back(u(rng));
    auto m = ablation::GbdtModel::fit(ablation::detail_training_set(combos, y));
    auto imp = ablation::normalized_importance(m);
    double sum = std::accumulate(imp.scores.begin(), imp.scores.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) o.fail(fmt::format("dataset {}: importances sum to {}", trial, sum));
    const auto& mse = m.training_mse();
    for (std::size_t i = 1; i < mse.size(); ++i)
      if (mse[i] > mse[i - 1]) o.fail(fmt::format("dataset {}: MSE rose at tree {}", trial, i));
  }

  std::vector<double> y;
  for (const auto& c : combos) y.push_back(c.find('5') != std::string::npos ? 0.85 : 0.55);
  auto single = ablation::normalized_importance(ablation::GbdtModel::fit(ablation::detail_training_set(combos, y)));
  if (single.scores[3] < 0.99) o.fail(fmt::format("single informative feature scored {}", single.scores[3]));

  ablation::TrainingSet hand;
  hand.feature_names = {"a", "b"};
  const double rows[4][3] = {{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 6}};
  for (int rep = 0; rep < 2; ++rep)
    for (const auto& r : rows) {
      hand.x.push_back({r[0], r[1]});
      hand.y.push_back(r[2]);
    }
  ablation::GbdtParams p;
  p.n_estimators = 2;
  p.learning_rate = 0.5;
  p.max_depth = 1;
  auto m = ablation::GbdtModel::fit(hand, p);
  const double want[4] = {1.75, 2.75, 3.25, 4.25};
  for (int i = 0; i < 4; ++i) {
    const double row[] = {rows[i][0], rows[i][1]};
    if (std::abs(m.predict(row) - want[i]) > 1e-12) o.fail(fmt::format("hand trace row {}: {}", i, m.predict(row)));
  }
  if (o.ok) o.detail = fmt::format("50 random datasets, single feature {:.4f}, hand trace exact", single.scores[3]);
  return o;
}

Outcome parser_fuzzing() {
  Outcome o;
  const std::unordered_set<std::string> known = {"R1", "R2", "SR-7", "REQ.4"};
  const std::vector<std::string> fragments = {"impacted ReqID: ", "justification: ", "R1", "R2", "R9", "SR-7",
                                              "REQ.4", ",", "\n", "**", "`", " ", "IMPACTED reqid:", "\r\n"};
  std::mt19937 rng(4);
  std::size_t found = 0;
  for (int i = 0; i < 10000 && o.ok; ++i) {
    std::string s;
    const int len = std::uniform_int_distribution<int>(0, 200)(rng);
    if (i % 2 == 0) {
      for (int k = 0; k < len; ++k) s.push_back(static_cast<char>(rng() & 0xff));
    } else {
      for (int k = 0; k < len / 8; ++k) {
        if (rng() % 4 == 0)
          s.push_back(static_cast<char>(rng() & 0xff));
        else
          s += fragments[rng() % fragments.size()];
      }
    }
    try {
      auto parsed = llm::parse_impact_output(s, known);
      std::set<std::string> seen;
      for (const auto& c : parsed.candidates) {
        if (!known.contains(c.req_id)) o.fail(fmt::format("input {}: unknown id {}", i, c.req_id));
        if (!seen.insert(c.req_id).second) o.fail(fmt::format("input {}: duplicate id {}", i, c.req_id));
      }
      found += parsed.candidates.size();
    } catch (const std::exception& e) {
      o.fail(fmt::format("input {} threw: {}", i, e.what()));
    }
  }
  if (o.ok) o.detail = fmt::format("10000 inputs, {} candidates extracted", found);
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"prompt enumeration", prompt_enumeration},
      {"cutoff golden values", cutoff_golden},
      {"F2 metric fidelity", metric_fidelity},
      {"cost fidelity", cost_fidelity},
      {"selection properties", selection_properties},
      {"refinement properties", refinement_properties},
      {"end-to-end strict replay", end_to_end_replay},
      {"gradient boosting", gbdt_properties},
      {"impact parser fuzzing", parser_fuzzing},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(fmt::format("threw: {}", e.what()));
    }
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << "\n";
    failed += o.ok ? 0 : 1;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", std::size(criteria) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
