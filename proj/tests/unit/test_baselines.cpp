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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "proreficia/baselines.hpp"
#include "proreficia/error.hpp"
#include "test_support.hpp"

using namespace proreficia;
using namespace proreficia::baselines;
using proreficia::testing::RecordingBackend;
using proreficia::testing::StubServer;

namespace {

SimilarityRanking ranking_of(std::initializer_list<double> scores) {
  SimilarityRanking r;
  int i = 1;
  for (double s : scores) r.push_back({"R" + std::to_string(i++), s});
  return r;
}

SimilarityRanking worked_example() { return ranking_of({0.85, 0.82, 0.80, 0.78, 0.60, 0.58, 0.57, 0.40}); }

std::vector<std::string> first_n(const SimilarityRanking& r, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(r[i].req_id);
  return out;
}

const prompt::DetailTextCatalog& catalog() {
  static const auto c = prompt::DetailTextCatalog::load(proreficia::testing::template_dir());
  return c;
}

corpus::Dataset three_reqs() {
  return corpus::parse_dataset(R"({
    "name": "three",
    "requirements": [{"id": "R1", "text": "Archive telemetry."}, {"id": "R2", "text": "Poll devices over SNMP."},
                     {"id": "R3", "text": "Display alarms."}],
    "change_rationales": [{"id": "C1", "text": "Replace SNMP with an SDN controller."}]
  })");
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("hashing embedder: unit norm, purity, known bucket") {
    HashingEmbedder e;
    auto v = e.embed_one("Telemetry frames shall be archived");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));
    CHECK(e.embed_one("Telemetry frames shall be archived") == v);
    CHECK(e.embed(std::span<const std::string>{}).empty());

    // FNV-1a 64 of "a" is 0xaf63dc4c8601ec8c: bucket 0x8c = 140, high bit set.
    auto a = e.embed_one("A");
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == (i == 140 ? -1.0 : 0.0));

    auto empty = e.embed_one("  ");
    norm = 0.0;
    for (double x : empty) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));
    CHECK_THROWS_AS(HashingEmbedder(0), DataError);
  }

  TEST_CASE("cosine") {
    Embedding a = {1.0, 2.0, 3.0}, b = {-1.0, -2.0, -3.0};
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK(cosine(a, b) == doctest::Approx(-1.0));
    CHECK(cosine({1.0, 0.0}, {0.0, 1.0}) == 0.0);
    CHECK_THROWS_AS(cosine({1.0}, {1.0, 0.0}), DataError);
    CHECK_THROWS_AS(cosine({0.0, 0.0}, {1.0, 0.0}), DataError);
  }

  TEST_CASE("ranking matches a brute-force cosine over the hashed vectors") {
    auto ds = corpus::parse_dataset(R"({
      "name": "four",
      "requirements": [
        {"id": "R1", "text": "The ground station shall poll devices over SNMP."},
        {"id": "R2", "text": "Telemetry shall be archived for ten years."},
        {"id": "R3", "text": "Operators shall configure routing through the SDN controller."},
        {"id": "R4", "text": "The SNMP agent shall report device faults to the controller."}],
      "change_rationales": [{"id": "C1", "text": "Replace SNMP device management with an SDN controller."}]
    })");
    HashingEmbedder e;
    auto ranking = rank_by_similarity(ds.rationales()[0], ds, e);
    REQUIRE(ranking.size() == 4);

    auto q = e.embed_one(ds.rationales()[0].text);
    std::vector<std::pair<double, std::string>> brute;
    for (const auto& r : ds.requirements()) {
      auto v = e.embed_one(r.text);
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
      brute.emplace_back(dot, r.id);
    }
    std::stable_sort(brute.begin(), brute.end(), [](auto& x, auto& y) { return x.first > y.first; });
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(ranking[i].req_id == brute[i].second);
      CHECK(ranking[i].score == doctest::Approx(brute[i].first).epsilon(1e-12));
    }
    CHECK(ranking.back().req_id == "R2");
  }

  TEST_CASE("equal texts tie and keep dataset order") {
    auto ds = corpus::parse_dataset(R"({
      "name": "dup",
      "requirements": [{"id": "B", "text": "same words"}, {"id": "A", "text": "same words"},
                       {"id": "C", "text": "other"}],
      "change_rationales": [{"id": "C1", "text": "same"}]
    })");
    HashingEmbedder e;
    auto ranking = rank_by_similarity(ds.rationales()[0], ds, e);
    CHECK(ranking[0].req_id == "B");
    CHECK(ranking[1].req_id == "A");
    CHECK(ranking[0].score == ranking[1].score);

    auto one = corpus::parse_dataset(
        R"({"name":"one","requirements":[{"id":"R1","text":"x"}],"change_rationales":[{"id":"C1","text":"x"}]})");
    CHECK(rank_by_similarity(one.rationales()[0], one, e).size() == 1);
  }

  TEST_CASE("T1 threshold") {
    auto r = ranking_of({0.9, 0.6, 0.5, 0.4});
    CHECK(cutoff_t1(r) == std::vector<std::string>{"R1", "R2"});
    CHECK(cutoff_t1(ranking_of({0.4, 0.3})).empty());
    CHECK(cutoff_t1(r, 0.0).size() == 4);
    CHECK_THROWS_AS(cutoff_t1(r, 1.5), DataError);
  }

  TEST_CASE("T2 and T3 on the worked score list") {
    auto r = worked_example();
    CHECK(cutoff_t2(r) == first_n(r, 7));
    CHECK(cutoff_t3(r) == first_n(r, 4));
    CHECK(apply_cutoff(r, CutoffStrategy::T2) == first_n(r, 7));
    CHECK(apply_cutoff(r, CutoffStrategy::T3) == first_n(r, 4));
  }

  TEST_CASE("T2 and T3 edge cases") {
    CHECK(cutoff_t2(ranking_of({0.5, 0.5, 0.5})).empty());
    CHECK(cutoff_t2(ranking_of({0.9, 0.1})) == std::vector<std::string>{"R1"});
    CHECK(cutoff_t3(ranking_of({0.9, 0.1})) == std::vector<std::string>{"R1"});
    // Equal largest gaps: the earlier one wins.
    CHECK(cutoff_t3(ranking_of({0.9, 0.7, 0.6, 0.4})) == std::vector<std::string>{"R1"});
    CHECK(cutoff_t3(ranking_of({0.5, 0.5, 0.5, 0.2})) == std::vector<std::string>{"R1", "R2", "R3"});
    CHECK_THROWS_AS(cutoff_t2(ranking_of({0.9})), DataError);
    CHECK_THROWS_AS(cutoff_t3(ranking_of({})), DataError);
  }

  TEST_CASE("cutoff properties on random rankings") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<ScoredRequirement> scores;
      const int n = 2 + trial % 20;
      for (int i = 0; i < n; ++i) scores.push_back({"R" + std::to_string(i), u(rng)});
      auto r = sort_ranking(scores);
      auto t2 = cutoff_t2(r);
      auto t3 = cutoff_t3(r);
      CHECK(t2 == first_n(r, t2.size()));
      CHECK(t3 == first_n(r, t3.size()));
      CHECK_FALSE(t3.empty());
      CHECK(t3.size() <= t2.size());
      auto lo = cutoff_t1(r, 0.2), hi = cutoff_t1(r, 0.6);
      for (const auto& id : hi) CHECK(std::find(lo.begin(), lo.end(), id) != lo.end());

      std::shuffle(scores.begin(), scores.end(), rng);
      auto again = sort_ranking(scores);
      CHECK(cutoff_t2(again).size() == t2.size());
      CHECK(cutoff_t3(again).size() == t3.size());
    }
  }

  TEST_CASE("cutoff names parse case-insensitively") {
    CHECK(parse_cutoff("T2") == CutoffStrategy::T2);
    CHECK(parse_cutoff("t3") == CutoffStrategy::T3);
    CHECK_FALSE(parse_cutoff("t4").has_value());
  }

  TEST_CASE("iterative baseline asks once per requirement") {
    auto ds = three_reqs();
    pipeline::PipelineConfig cfg;
    RecordingBackend backend([](const llm::ChatRequest& r) {
      auto ids = proreficia::testing::listed_ids(r.prompt);
      return ids == std::vector<std::string>{"R2"} ? proreficia::testing::impact_lines({"R2"}) : std::string("none");
    });
    pipeline::StageContext ctx{ds, catalog(), backend, cfg};
    auto res = iterative_baseline(ds.rationales()[0], ctx, 2);
    CHECK(backend.count() == 3);
    CHECK(res.trace.count_stage("iterative") == 3);
    CHECK(res.impact.ids() == std::vector<std::string>{"R2"});
    for (const auto& r : backend.requests()) CHECK(proreficia::testing::listed_ids(r.prompt).size() == 1);

    RecordingBackend negative([](const llm::ChatRequest&) { return std::string("no impact"); });
    CHECK(iterative_baseline(ds.rationales()[0], {ds, catalog(), negative, cfg}).impact.empty());
  }

  TEST_CASE("yes/no verdicts") {
    CHECK(parse_yes_no("Answer: yes") == true);
    CHECK(parse_yes_no("Reasoning says yes at first.\nAnswer: No.") == false);
    CHECK(parse_yes_no("**Final answer:** Yes") == true);
    CHECK(parse_yes_no("no link, well, yes there is") == true);
    CHECK_FALSE(parse_yes_no("It depends.").has_value());
    CHECK(parse_yes_no("Answer: unclear\nyes") == true);
  }

  TEST_CASE("CoT baseline asks about the top k only") {
    auto ds = three_reqs();
    auto ranking = ranking_of({0.9, 0.5, 0.1});
    CotSettings settings;
    settings.pair_template = proreficia::testing::slurp(proreficia::testing::template_dir() / "cot_pair.txt");
    RecordingBackend backend([](const llm::ChatRequest& r) {
      if (r.prompt.find("requirement R1") != std::string::npos) return std::string("Because...\nAnswer: yes");
      if (r.prompt.find("requirement R2") != std::string::npos) return std::string("Hard to say.");
      return std::string("Answer: yes");
    });
    auto res = cot_baseline(ds.rationales()[0], ds, ranking, 2, backend, settings);
    CHECK(backend.count() == 2);
    CHECK(res.impact.ids() == std::vector<std::string>{"R1"});
    REQUIRE(res.trace.calls.size() == 2);
    CHECK(res.trace.calls[1].warnings.size() == 1);
    CHECK(backend.requests()[0].prompt.find("Poll devices") == std::string::npos);
    CHECK(backend.requests()[0].prompt.find("Archive telemetry.") != std::string::npos);

    auto all = cot_baseline(ds.rationales()[0], ds, ranking, 3, backend, settings);
    CHECK(all.impact.ids() == std::vector<std::string>{"R1", "R3"});
    CHECK_THROWS_AS(cot_baseline(ds.rationales()[0], ds, ranking, 0, backend, settings), DataError);
    CHECK_THROWS_AS(cot_baseline(ds.rationales()[0], ds, ranking, 4, backend, settings), DataError);
  }

  TEST_CASE("k grid search keeps the best F2, smallest k on ties") {
    CHECK(default_k_grid(72) == std::vector<std::size_t>{5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70});
    CHECK(default_k_grid(4).empty());

    const std::map<std::size_t, double> f2 = {{5, 0.41}, {10, 0.55}, {15, 0.61}, {20, 0.66}, {25, 0.66}, {30, 0.6}};
    std::vector<std::size_t> grid = {30, 5, 10, 20, 15, 25, 20};
    auto res = cot_grid_search(grid, [&](std::size_t k) { return f2.at(k); });
    // Brute-force scan over the same grid.
    std::size_t best = 0;
    for (const auto& [k, v] : f2)
      if (best == 0 || v > f2.at(best)) best = k;
    CHECK(res.best_k == best);
    CHECK(res.best_k == 20);
    CHECK(res.best_f2 == 0.66);
    CHECK(res.points.size() == 6);
    CHECK_THROWS_AS(cot_grid_search({}, [](std::size_t) { return 0.0; }), DataError);
  }
}

TEST_SUITE("http") {
  TEST_CASE("embedding client places vectors by index") {
    StubServer stub;
    nlohmann::json seen;
    stub.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
      seen = nlohmann::json::parse(req.body);
      res.set_content(R"({"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]})",
                      "application/json");
    });
    stub.server().Post("/short", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"index":0,"embedding":[1.0]}]})", "application/json");
    });
    stub.server().Post("/ragged", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"embedding":[1.0]},{"embedding":[1.0,2.0]}]})", "application/json");
    });
    stub.start();

    HttpEmbedder embedder({stub.url(), "/v1/embeddings", "text-embedding-3-large", "", std::chrono::seconds(5)});
    std::vector<std::string> texts = {"first", "second"};
    auto vs = embedder.embed(texts);
    CHECK(seen["model"] == "text-embedding-3-large");
    CHECK(seen["input"] == nlohmann::json::array({"first", "second"}));
    REQUIRE(vs.size() == 2);
    CHECK(vs[0] == Embedding{1.0, 0.0});
    CHECK(vs[1] == Embedding{0.0, 1.0});

    HttpEmbedder shorter({stub.url(), "/short", "m", "", std::chrono::seconds(5)});
    CHECK_THROWS_AS(shorter.embed(texts), BackendError);
    HttpEmbedder ragged({stub.url(), "/ragged", "m", "", std::chrono::seconds(5)});
    CHECK_THROWS_AS(ragged.embed(texts), BackendError);
  }
}
