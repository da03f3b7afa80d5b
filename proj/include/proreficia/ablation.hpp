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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proreficia/evalmetrics.hpp"

namespace proreficia::ablation {

/// Regression inputs: one row per observation, one column per feature.
struct TrainingSet {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> x;
  std::vector<double> y;

  std::size_t rows() const { return y.size(); }
  std::size_t features() const { return feature_names.size(); }
  /// Throws DataError on ragged rows, non-finite values or fewer than two rows.
  void validate() const;
};

/// Rows whose features are the optional-detail indicators (details 1, 3,
/// 4, 5, 6, 7) of each prompt variant.
TrainingSet detail_training_set(std::span<const std::string> combinations, std::span<const double> targets);

enum class RowMode {
  PerPrompt,     // rows sharing a combination are averaged into one
  PerRationale,  // every CSV row is kept
};

/// Loads a table with a `combination` (or `prompt`) column and the named
/// target column. Targets above 1 are read as percentages and divided by 100.
TrainingSet load_f2_csv(const std::filesystem::path& path, std::string_view column,
                        RowMode mode = RowMode::PerPrompt);

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t samples = 0;
  double impurity = 0.0;  // variance of the node's targets
};

/// Least-squares regression tree. Splits maximize the reduction in summed
/// squared error; thresholds sit halfway between adjacent distinct values;
/// equal gains keep the lowest feature index, then the lowest threshold.
class RegressionTree {
 public:
  static RegressionTree fit(const std::vector<std::vector<double>>& x, std::span<const double> y, int max_depth,
                            std::size_t min_samples_split = 2);

  double predict(std::span<const double> row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  /// Per feature: sum over its splits of N*I - N_L*I_L - N_R*I_R, divided
  /// by the root sample count.
  std::vector<double> impurity_decrease(std::size_t feature_count) const;

 private:
  std::vector<TreeNode> nodes_;
};

struct GbdtParams {
  int n_estimators = 40;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_samples_split = 2;
  /// Kept for configuration parity; the split search is deterministic.
  std::uint64_t seed = 42;
};

/// Squared-error gradient boosting: start from the target mean, fit each
/// tree to the current residuals, add it shrunk by the learning rate.
class GbdtModel {
 public:
  static GbdtModel fit(const TrainingSet& data, const GbdtParams& params = {});

  double predict(std::span<const double> row) const;
  std::vector<double> predict_all(const std::vector<std::vector<double>>& x) const;

  /// Training MSE after 0, 1, ..., n trees (n + 1 entries).
  const std::vector<double>& training_mse() const { return mse_; }
  double base() const { return base_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t feature_count() const { return features_; }
  bool fitted() const { return fitted_; }

  /// Impurity decreases averaged over the trees that split at least once.
  /// Throws DataError on an unfitted model.
  std::vector<double> raw_importance() const;

 private:
  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::size_t features_ = 0;
  bool fitted_ = false;
  std::vector<RegressionTree> trees_;
  std::vector<double> mse_;
};

struct Importance {
  std::vector<double> scores;  // sum to 1 unless degenerate
  bool degenerate = false;     // every raw score was 0
};

Importance normalized_importance(const GbdtModel& model);

enum class Effect { Positive, Negative };

char effect_symbol(Effect e);

/// "+" when the mean target with the feature present exceeds the mean with
/// it absent; equal means give "-". Throws DataError if either group is empty.
Effect effect_sign(const TrainingSet& data, std::size_t feature);

struct ImportanceRow {
  std::string feature;
  double score = 0.0;
  Effect effect = Effect::Negative;
};

struct ImportanceReport {
  std::string label;
  std::vector<ImportanceRow> rows;  // descending score, ties by feature order
  bool degenerate = false;
};

ImportanceReport analyze(const TrainingSet& data, const GbdtParams& params = {}, std::string label = {});

/// detail,S,E with scores to two decimals.
std::string render_importance(const ImportanceReport& report, eval::ReportFormat format);

/// Smallest n whose MSE is within 1e-6 (relative) of the curve minimum.
/// `curve` pairs (n, mse). Throws DataError on an empty curve.
std::size_t elbow_from_curve(std::span<const std::pair<std::size_t, double>> curve);

/// Fits once with the largest n of `grid` and reads the training MSE at
/// each grid point.
std::size_t elbow_select(const TrainingSet& data, std::span<const std::size_t> grid, GbdtParams params = {});

}  // namespace proreficia::ablation
