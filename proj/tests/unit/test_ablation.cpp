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
#include <numeric>
#include <random>

#include "proreficia/ablation.hpp"
#include "proreficia/error.hpp"
#include "proreficia/promptkit.hpp"
#include "test_support.hpp"

using namespace proreficia;
using namespace proreficia::ablation;
using proreficia::testing::fixture_dir;

namespace {

// Two binary features, each combination twice.
TrainingSet hand_set() {
  TrainingSet t;
  t.feature_names = {"a", "b"};
  const double rows[4][3] = {{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 6}};
  for (int rep = 0; rep < 2; ++rep)
    for (const auto& r : rows) {
      t.x.push_back({r[0], r[1]});
      t.y.push_back(r[2]);
    }
  return t;
}

std::vector<std::string> all_combinations() {
  std::vector<std::string> out;
  for (const auto& p : prompt::enumerate_prompts()) out.push_back(p.combination());
  return out;
}

bool has(const std::string& combo, char d) { return combo.find(d) != std::string::npos; }

// 64 prompt rows: detail 6 helps, detail 3 hurts, small deterministic noise.
TrainingSet signed_fixture() {
  auto combos = all_combinations();
  std::vector<double> y;
  for (std::size_t i = 0; i < combos.size(); ++i)
    y.push_back(0.8 + 0.05 * has(combos[i], '6') - 0.04 * has(combos[i], '3') + 0.002 * std::sin(double(i)));
  return detail_training_set(combos, y);
}

}  // namespace

TEST_SUITE("ablation") {
  TEST_CASE("two-tree boosting matches the hand trace") {
    GbdtParams p;
    p.n_estimators = 2;
    p.learning_rate = 0.5;
    p.max_depth = 1;
    auto m = GbdtModel::fit(hand_set(), p);
    CHECK(m.base() == 3.0);
    REQUIRE(m.trees().size() == 2);
    CHECK(m.trees()[0].nodes()[0].feature == 0);
    CHECK(m.trees()[1].nodes()[0].feature == 1);
    CHECK(m.trees()[0].nodes()[0].threshold == 0.5);

    const double expected[4][3] = {{0, 0, 1.75}, {0, 1, 2.75}, {1, 0, 3.25}, {1, 1, 4.25}};
    for (const auto& e : expected) {
      const double row[] = {e[0], e[1]};
      CHECK(std::abs(m.predict(row) - e[2]) < 1e-12);
    }
    const std::vector<double> mse = {3.5, 1.8125, 1.0625};
    REQUIRE(m.training_mse().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(m.training_mse()[i] - mse[i]) < 1e-12);

    auto raw = m.raw_importance();
    CHECK(std::abs(raw[0] - 1.125) < 1e-12);
    CHECK(std::abs(raw[1] - 0.5) < 1e-12);
    auto imp = normalized_importance(m);
    CHECK(std::abs(imp.scores[0] - 9.0 / 13.0) < 1e-12);
    CHECK(std::abs(imp.scores[1] - 4.0 / 13.0) < 1e-12);
    CHECK_FALSE(imp.degenerate);
  }

  TEST_CASE("reference boosting run: WASP, GPT-4o F2 column") {
    // Reference values from scikit-learn GradientBoostingRegressor
    // (n_estimators=40, random_state=42, other settings default) on the same
    // 64 rows with features ordered 1, 3, 4, 5, 6, 7.
    auto data = load_f2_csv(fixture_dir() / "table_wasp.csv", "gpt4o_f2");
    REQUIRE(data.rows() == 64);
    auto m = GbdtModel::fit(data);
    auto raw = normalized_importance(m).scores;
    const std::vector<double> importances = {0.007694896075480288, 0.5733280590838596, 0.029720996263437417,
                                             0.1198928942332873,   0.22471666137479626, 0.04464649296913902};
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(raw[i] - importances[i]) < 1e-9);
    const std::pair<std::size_t, double> preds[] = {
        {0, 0.8119003539905862}, {11, 0.7967759851940669}, {29, 0.7866447790749478}, {63, 0.7682956616518984}};
    for (const auto& [row, want] : preds) CHECK(std::abs(m.predict(data.x[row]) - want) < 1e-9);
    CHECK(std::abs(m.training_mse().back() - 0.0010005092260431834) < 1e-9);
  }

  TEST_CASE("reference boosting run: SAT-DLink, LLaMa F2 column") {
    auto data = load_f2_csv(fixture_dir() / "table_satdlink.csv", "llama_f2");
    REQUIRE(data.rows() == 64);
    auto m = GbdtModel::fit(data);
    auto raw = normalized_importance(m).scores;
    const std::vector<double> importances = {0.2026945755789287, 0.17255562642286326, 0.21093490651592978,
                                             0.139815336648288,  0.16377485615065054, 0.11022469868333967};
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(raw[i] - importances[i]) < 1e-9);
    const std::pair<std::size_t, double> preds[] = {
        {0, 0.6729617826708905}, {11, 0.6761648576472346}, {29, 0.7062863527049125}, {63, 0.5781826147568977}};
    for (const auto& [row, want] : preds) CHECK(std::abs(m.predict(data.x[row]) - want) < 1e-9);
    CHECK(std::abs(m.training_mse().back() - 0.0009435634395191504) < 1e-9);
  }

  TEST_CASE("constant targets give a degenerate importance") {
    auto combos = all_combinations();
    std::vector<double> y(combos.size(), 0.7);
    auto data = detail_training_set(combos, y);
    auto m = GbdtModel::fit(data);
    for (const auto& row : data.x) CHECK(m.predict(row) == doctest::Approx(0.7));
    CHECK(m.training_mse().back() == doctest::Approx(0.0));
    auto imp = normalized_importance(m);
    CHECK(imp.degenerate);
    for (double s : imp.scores) CHECK(s == 0.0);
    auto report = analyze(data, {}, "flat");
    CHECK(report.degenerate);
    CHECK(render_importance(report, eval::ReportFormat::Markdown).find("degenerate") != std::string::npos);
  }

  TEST_CASE("a single informative feature takes the importance") {
    auto combos = all_combinations();
    std::vector<double> y;
    for (const auto& c : combos) y.push_back(has(c, '3') ? 0.9 : 0.6);
    auto data = detail_training_set(combos, y);
    auto m = GbdtModel::fit(data);
    auto imp = normalized_importance(m);
    CHECK(imp.scores[1] >= 0.99);
    const auto& mse = m.training_mse();
    for (std::size_t i = 1; i < mse.size(); ++i) CHECK(mse[i] <= mse[i - 1] + 1e-15);
    CHECK(mse.back() < 1e-3 * mse.front());
  }

  TEST_CASE("duplicate features: the lower index takes every tie") {
    TrainingSet t;
    t.feature_names = {"f0", "f1", "noise"};
    std::mt19937 rng(3);
    for (int i = 0; i < 32; ++i) {
      double f = i % 2;
      double noise = (i / 2) % 2;
      t.x.push_back({f, f, noise});
      t.y.push_back(f * 0.5 + 0.01 * std::uniform_real_distribution<double>(0, 1)(rng));
    }
    // A single depth-1 tree: the whole decrease belongs to the split on f0.
    auto tree = RegressionTree::fit(t.x, t.y, 1);
    auto dec = tree.impurity_decrease(3);
    CHECK(dec[0] > 0.0);
    CHECK(dec[1] == 0.0);
    CHECK(dec[2] == 0.0);

    auto imp = normalized_importance(GbdtModel::fit(t));
    CHECK(imp.scores[0] + imp.scores[1] > 0.9);
    CHECK(imp.scores[1] == 0.0);
  }

  TEST_CASE("importance properties on random targets") {
    auto combos = all_combinations();
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.3, 0.9);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> y;
      for (std::size_t i = 0; i < combos.size(); ++i) y.push_back(u(rng));
      auto m = GbdtModel::fit(detail_training_set(combos, y));
      auto imp = normalized_importance(m);
      CHECK(std::accumulate(imp.scores.begin(), imp.scores.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      for (double s : imp.scores) CHECK(s >= 0.0);
      const auto& mse = m.training_mse();
      for (std::size_t i = 1; i < mse.size(); ++i) CHECK(mse[i] <= mse[i - 1] + 1e-15);
    }
  }

  TEST_CASE("row order does not change the model") {
    auto data = signed_fixture();
    auto shuffled = data;
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937(8));
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled.x[i] = data.x[order[i]];
      shuffled.y[i] = data.y[order[i]];
    }
    auto a = GbdtModel::fit(data), b = GbdtModel::fit(shuffled);
    for (const auto& row : data.x) CHECK(a.predict(row) == doctest::Approx(b.predict(row)).epsilon(1e-12));
    auto ia = normalized_importance(a).scores, ib = normalized_importance(b).scores;
    for (std::size_t i = 0; i < ia.size(); ++i) CHECK(ia[i] == doctest::Approx(ib[i]).epsilon(1e-9));
  }

  TEST_CASE("effect signs") {
    auto data = signed_fixture();
    CHECK(effect_sign(data, 4) == Effect::Positive);  // detail 6
    CHECK(effect_sign(data, 1) == Effect::Negative);  // detail 3
    CHECK(effect_symbol(Effect::Positive) == '+');
    CHECK(effect_symbol(Effect::Negative) == '-');

    auto report = analyze(data, {}, "fixture");
    REQUIRE(report.rows.size() == 6);
    CHECK(report.rows[0].feature == "6");
    CHECK(report.rows[0].effect == Effect::Positive);
    CHECK(report.rows[1].feature == "3");
    CHECK(report.rows[1].effect == Effect::Negative);
    for (std::size_t i = 1; i < report.rows.size(); ++i) CHECK(report.rows[i - 1].score >= report.rows[i].score);

    TrainingSet equal;
    equal.feature_names = {"d"};
    equal.x = {{0}, {1}, {0}, {1}};
    equal.y = {0.5, 0.4, 0.3, 0.4};
    CHECK(effect_sign(equal, 0) == Effect::Negative);
    equal.x = {{1}, {1}, {1}, {1}};
    CHECK_THROWS_AS(effect_sign(equal, 0), DataError);
  }

  TEST_CASE("importance report rendering") {
    ImportanceReport r{"WASP gpt4o", {{"3", 0.573, Effect::Negative}, {"6", 0.225, Effect::Positive}}, false};
    CHECK(render_importance(r, eval::ReportFormat::Csv) == "detail,S,E\n3,0.57,-\n6,0.23,+\n");
    auto md = render_importance(r, eval::ReportFormat::Markdown);
    CHECK(md.starts_with("### WASP gpt4o\n"));
    CHECK(md.find("| 3 | 0.57 | - |") != std::string::npos);
  }

  TEST_CASE("elbow selection") {
    const std::pair<std::size_t, double> flat[] = {{10, 0.5}, {20, 0.5}, {40, 0.5}};
    CHECK(elbow_from_curve(flat) == 10);
    const std::pair<std::size_t, double> drop[] = {{10, 0.9}, {20, 0.4}, {40, 0.1}, {60, 0.1}, {80, 0.1}};
    CHECK(elbow_from_curve(drop) == 40);
    CHECK_THROWS_AS(elbow_from_curve(std::span<const std::pair<std::size_t, double>>{}), DataError);

    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::pair<std::size_t, double>> curve;
      for (std::size_t n = 5; n <= 100; n += 5) curve.emplace_back(n, std::round(u(rng) * 20) / 20);
      double best = curve[0].second;
      for (const auto& [n, v] : curve) best = std::min(best, v);
      std::size_t want = 0;
      for (const auto& [n, v] : curve)
        if (want == 0 && v <= best) want = n;
      CHECK(elbow_from_curve(curve) == want);
    }

    auto data = signed_fixture();
    const std::size_t grid[] = {10, 20, 40};
    auto n = elbow_select(data, grid);
    CHECK((n == 10 || n == 20 || n == 40));
    GbdtParams p;
    p.n_estimators = 40;
    auto m = GbdtModel::fit(data, p);
    const std::pair<std::size_t, double> curve[] = {
        {10, m.training_mse()[10]}, {20, m.training_mse()[20]}, {40, m.training_mse()[40]}};
    CHECK(n == elbow_from_curve(curve));
  }

  TEST_CASE("loading F2 tables") {
    proreficia::testing::TempDir dir;
    proreficia::testing::spit(dir / "t.csv",
                              "prompt,combination,x_f2\n"
                              "P1,2,80.0\n"
                              "P2,12,60.0\n"
                              "P1,2,70.0\n");
    auto per_prompt = load_f2_csv(dir / "t.csv", "x_f2");
    REQUIRE(per_prompt.rows() == 2);
    CHECK(per_prompt.y[0] == doctest::Approx(0.75));
    CHECK(per_prompt.y[1] == doctest::Approx(0.6));
    CHECK(per_prompt.x[1] == std::vector<double>{1, 0, 0, 0, 0, 0});
    CHECK(per_prompt.feature_names == std::vector<std::string>{"1", "3", "4", "5", "6", "7"});
    CHECK(load_f2_csv(dir / "t.csv", "x_f2", RowMode::PerRationale).rows() == 3);

    proreficia::testing::spit(dir / "ids.csv", "prompt,y\nP30,0.5\nP1,0.25\n");
    auto by_id = load_f2_csv(dir / "ids.csv", "y");
    CHECK(by_id.x[0] == std::vector<double>{1, 0, 0, 1, 1, 0});
    CHECK(by_id.y[1] == 0.25);

    CHECK_THROWS_AS(load_f2_csv(dir / "t.csv", "missing"), DataError);
    CHECK_THROWS_AS(load_f2_csv(dir / "nope.csv", "x_f2"), DataError);
  }

  TEST_CASE("invalid inputs") {
    TrainingSet one;
    one.feature_names = {"a"};
    one.x = {{1}};
    one.y = {1};
    CHECK_THROWS_AS(GbdtModel::fit(one), DataError);
    TrainingSet ragged = hand_set();
    ragged.x[3].push_back(1);
    CHECK_THROWS_AS(ragged.validate(), DataError);
    TrainingSet nan = hand_set();
    nan.y[0] = std::nan("");
    CHECK_THROWS_AS(nan.validate(), DataError);

    GbdtModel unfitted;
    CHECK_THROWS_AS(unfitted.raw_importance(), DataError);
    const double row[] = {0, 0};
    CHECK_THROWS_AS(unfitted.predict(row), DataError);
  }
}
