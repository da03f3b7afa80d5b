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

#include "proreficia/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "proreficia/error.hpp"
#include "proreficia/promptkit.hpp"
#include "proreficia/text.hpp"

namespace proreficia::ablation {

namespace {

constexpr double kEpsilon = std::numeric_limits<double>::epsilon();
constexpr double kFeatureTolerance = 1e-7;
constexpr std::array<int, 6> kDetailFeatures{1, 3, 4, 5, 6, 7};

std::vector<double> indicators(std::string_view combination) {
  std::vector<double> row(kDetailFeatures.size(), 0.0);
  for (char c : combination) {
    if (c < '1' || c > '7') throw DataError(fmt::format("bad detail combination '{}'", combination));
    if (c == '2') continue;
    auto it = std::find(kDetailFeatures.begin(), kDetailFeatures.end(), c - '0');
    row[static_cast<std::size_t>(it - kDetailFeatures.begin())] = 1.0;
  }
  return row;
}

std::vector<std::string> detail_names() {
  std::vector<std::string> names;
  for (int d : kDetailFeatures) names.push_back(std::to_string(d));
  return names;
}

}  // namespace

void TrainingSet::validate() const {
  if (rows() < 2) throw DataError(fmt::format("need at least two rows, got {}", rows()));
  if (x.size() != y.size()) throw DataError("feature rows and targets differ in length");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != features())
      throw DataError(fmt::format("row {} has {} features, expected {}", i + 1, x[i].size(), features()));
    for (double v : x[i])
      if (!std::isfinite(v)) throw DataError(fmt::format("row {} has a non-finite feature", i + 1));
    if (!std::isfinite(y[i])) throw DataError(fmt::format("row {} has a non-finite target", i + 1));
  }
}

TrainingSet detail_training_set(std::span<const std::string> combinations, std::span<const double> targets) {
  if (combinations.size() != targets.size()) throw DataError("combinations and targets differ in length");
  TrainingSet set;
  set.feature_names = detail_names();
  for (std::size_t i = 0; i < combinations.size(); ++i) {
    set.x.push_back(indicators(combinations[i]));
    set.y.push_back(targets[i]);
  }
  return set;
}

TrainingSet load_f2_csv(const std::filesystem::path& path, std::string_view column, RowMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto lines = text::split_lines(content);
  auto split = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.emplace_back(text::trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  if (lines.empty()) throw DataError(fmt::format("{}: empty table", path.string()));
  auto header = split(lines[0]);
  auto find_col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (text::to_lower(header[i]) == text::to_lower(name)) return i;
    return std::nullopt;
  };
  auto target_col = find_col(column);
  if (!target_col) throw DataError(fmt::format("{}: no column '{}'", path.string(), column));
  auto combo_col = find_col("combination");
  auto prompt_col = find_col("prompt");
  if (!combo_col && !prompt_col) throw DataError(fmt::format("{}: needs a combination or prompt column", path.string()));

  std::vector<std::string> combos;
  std::vector<double> values;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (text::trim(lines[ln]).empty()) continue;
    auto cells = split(lines[ln]);
    if (cells.size() != header.size())
      throw DataError(fmt::format("{}:{}: {} cells, expected {}", path.string(), ln + 1, cells.size(), header.size()));
    std::string combo = combo_col ? cells[*combo_col] : prompt::PromptSpec::from_id(cells[*prompt_col]).combination();
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(cells[*target_col], &used);
      if (used != cells[*target_col].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DataError(fmt::format("{}:{}: '{}' is not a number", path.string(), ln + 1, cells[*target_col]));
    }
    combos.push_back(std::move(combo));
    values.push_back(v);
  }
  if (std::any_of(values.begin(), values.end(), [](double v) { return v > 1.0; }))
    for (double& v : values) v /= 100.0;

  if (mode == RowMode::PerPrompt) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < combos.size(); ++i) {
      auto [it, inserted] = acc.try_emplace(combos[i], 0.0, 0);
      if (inserted) order.push_back(combos[i]);
      it->second.first += values[i];
      ++it->second.second;
    }
    combos = order;
    values.clear();
    for (const auto& c : order) values.push_back(acc[c].first / static_cast<double>(acc[c].second));
  }
  auto set = detail_training_set(combos, values);
  set.validate();
  return set;
}

// --- Trees -------------------------------------------------------------------

namespace {

struct Builder {
  const std::vector<std::vector<double>>& x;
  std::span<const double> y;
  int max_depth;
  std::size_t min_samples_split;
  std::vector<TreeNode>& nodes;

  int build(std::vector<std::size_t>& idx, int depth) {
    const std::size_t n = idx.size();
    double sum = 0.0;
    for (auto i : idx) sum += y[i];
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (auto i : idx) sq += (y[i] - mean) * (y[i] - mean);

    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = mean;
    nodes[id].samples = n;
    nodes[id].impurity = sq / static_cast<double>(n);

    if (depth >= max_depth || n < min_samples_split || n < 2 || nodes[id].impurity <= kEpsilon) return id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_proxy = -std::numeric_limits<double>::infinity();
    const std::size_t features = x[idx.front()].size();
    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < features; ++f) {
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a][f] < x[b][f]; });
      if (x[order.back()][f] <= x[order.front()][f] + kFeatureTolerance) continue;
      double left = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left += y[order[k]];
        const double a = x[order[k]][f], b = x[order[k + 1]][f];
        if (b <= a + kFeatureTolerance) continue;
        const double nl = static_cast<double>(k + 1), nr = static_cast<double>(n - k - 1);
        const double right = sum - left;
        const double proxy = left * left / nl + right * right / nr;
        if (proxy > best_proxy) {
          best_proxy = proxy;
          best_feature = static_cast<int>(f);
          best_threshold = a / 2.0 + b / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? li : ri).push_back(i);
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

RegressionTree RegressionTree::fit(const std::vector<std::vector<double>>& x, std::span<const double> y, int max_depth,
                                   std::size_t min_samples_split) {
  if (x.empty() || x.size() != y.size()) throw DataError("tree fit needs matching non-empty inputs");
  RegressionTree tree;
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  Builder{x, y, max_depth, min_samples_split, tree.nodes_}.build(idx, 0);
  return tree;
}

double RegressionTree::predict(std::span<const double> row) const {
  int node = 0;
  while (nodes_[node].feature >= 0)
    node = row[static_cast<std::size_t>(nodes_[node].feature)] <= nodes_[node].threshold ? nodes_[node].left
                                                                                        : nodes_[node].right;
  return nodes_[node].value;
}

std::vector<double> RegressionTree::impurity_decrease(std::size_t feature_count) const {
  std::vector<double> out(feature_count, 0.0);
  if (nodes_.empty()) return out;
  for (const auto& node : nodes_) {
    if (node.feature < 0) continue;
    const auto& l = nodes_[node.left];
    const auto& r = nodes_[node.right];
    out[static_cast<std::size_t>(node.feature)] += static_cast<double>(node.samples) * node.impurity -
                                                    static_cast<double>(l.samples) * l.impurity -
                                                    static_cast<double>(r.samples) * r.impurity;
  }
  for (double& v : out) v /= static_cast<double>(nodes_.front().samples);
  return out;
}

// --- Boosting ----------------------------------------------------------------

GbdtModel GbdtModel::fit(const TrainingSet& data, const GbdtParams& params) {
  data.validate();
  if (params.n_estimators < 0) throw DataError("estimator count must be non-negative");
  if (!(params.learning_rate > 0.0)) throw DataError("learning rate must be positive");
  if (params.max_depth < 1) throw DataError("max depth must be at least 1");

  GbdtModel m;
  m.learning_rate_ = params.learning_rate;
  m.features_ = data.features();
  const std::size_t n = data.rows();
  m.base_ = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, m.base_);
  std::vector<double> residual(n);
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (data.y[i] - pred[i]) * (data.y[i] - pred[i]);
    return s / static_cast<double>(n);
  };
  m.mse_.push_back(mse());
  for (int t = 0; t < params.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = data.y[i] - pred[i];
    auto tree = RegressionTree::fit(data.x, residual, params.max_depth, params.min_samples_split);
    for (std::size_t i = 0; i < n; ++i) pred[i] += params.learning_rate * tree.predict(data.x[i]);
    m.trees_.push_back(std::move(tree));
    m.mse_.push_back(mse());
  }
  m.fitted_ = true;
  return m;
}

double GbdtModel::predict(std::span<const double> row) const {
  if (!fitted_) throw DataError("model is not fitted");
  if (row.size() != features_) throw DataError(fmt::format("expected {} features, got {}", features_, row.size()));
  double p = base_;
  for (const auto& t : trees_) p += learning_rate_ * t.predict(row);
  return p;
}

std::vector<double> GbdtModel::predict_all(const std::vector<std::vector<double>>& x) const {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(predict(row));
  return out;
}

std::vector<double> GbdtModel::raw_importance() const {
  if (!fitted_) throw DataError("model is not fitted");
  std::vector<double> sum(features_, 0.0);
  std::size_t used = 0;
  for (const auto& t : trees_) {
    if (t.nodes().size() <= 1) continue;
    auto imp = t.impurity_decrease(features_);
    for (std::size_t f = 0; f < features_; ++f) sum[f] += imp[f];
    ++used;
  }
  if (used > 0)
    for (double& v : sum) v /= static_cast<double>(used);
  return sum;
}

Importance normalized_importance(const GbdtModel& model) {
  Importance out;
  out.scores = model.raw_importance();
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  if (total <= 0.0) {
    std::fill(out.scores.begin(), out.scores.end(), 0.0);
    out.degenerate = true;
    return out;
  }
  for (double& v : out.scores) v /= total;
  return out;
}

char effect_symbol(Effect e) { return e == Effect::Positive ? '+' : '-'; }

Effect effect_sign(const TrainingSet& data, std::size_t feature) {
  if (feature >= data.features()) throw DataError(fmt::format("feature index {} out of range", feature));
  double with = 0.0, without = 0.0;
  std::size_t nw = 0, nwo = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.x[i][feature] > 0.5) {
      with += data.y[i];
      ++nw;
    } else {
      without += data.y[i];
      ++nwo;
    }
  }
  if (nw == 0 || nwo == 0)
    throw DataError(fmt::format("feature {} is never {}", data.feature_names[feature], nw == 0 ? "present" : "absent"));
  return with / static_cast<double>(nw) > without / static_cast<double>(nwo) ? Effect::Positive : Effect::Negative;
}

ImportanceReport analyze(const TrainingSet& data, const GbdtParams& params, std::string label) {
  auto model = GbdtModel::fit(data, params);
  auto imp = normalized_importance(model);
  ImportanceReport report{std::move(label), {}, imp.degenerate};
  for (std::size_t f = 0; f < data.features(); ++f)
    report.rows.push_back({data.feature_names[f], imp.scores[f], effect_sign(data, f)});
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) { return a.score > b.score; });
  return report;
}

std::string render_importance(const ImportanceReport& report, eval::ReportFormat format) {
  std::string out;
  if (format == eval::ReportFormat::Csv) {
    out += "detail,S,E\n";
    for (const auto& r : report.rows) out += fmt::format("{},{:.2f},{}\n", r.feature, r.score, effect_symbol(r.effect));
    return out;
  }
  if (!report.label.empty()) out += fmt::format("### {}\n\n", report.label);
  out += "| detail | S | E |\n|---|---:|:---:|\n";
  for (const auto& r : report.rows) out += fmt::format("| {} | {:.2f} | {} |\n", r.feature, r.score, effect_symbol(r.effect));
  if (report.degenerate) out += "\nImportance is degenerate: every score is zero (constant target).\n";
  return out;
}

std::size_t elbow_from_curve(std::span<const std::pair<std::size_t, double>> curve) {
  if (curve.empty()) throw DataError("elbow needs a non-empty grid");
  double best = curve.front().second;
  for (const auto& [n, mse] : curve) best = std::min(best, mse);
  const double limit = best + 1e-6 * std::abs(best) + 1e-15;
  std::size_t pick = std::numeric_limits<std::size_t>::max();
  for (const auto& [n, mse] : curve)
    if (mse <= limit) pick = std::min(pick, n);
  return pick;
}

std::size_t elbow_select(const TrainingSet& data, std::span<const std::size_t> grid, GbdtParams params) {
  if (grid.empty()) throw DataError("elbow needs a non-empty grid");
  params.n_estimators = static_cast<int>(*std::max_element(grid.begin(), grid.end()));
  auto model = GbdtModel::fit(data, params);
  std::vector<std::pair<std::size_t, double>> curve;
  for (auto n : grid) curve.emplace_back(n, model.training_mse()[n]);
  return elbow_from_curve(curve);
}

}  // namespace proreficia::ablation
