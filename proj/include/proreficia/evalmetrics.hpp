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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proreficia::eval {

struct ConfusionCounts {
  std::string rationale_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const std::set<std::string>& predicted, const std::set<std::string>& gold,
                          std::string rationale_id = {});

struct Prf2 {
  double precision = 0.0;
  double recall = 0.0;
  double f2 = 0.0;
};

/// Precision, recall and F2 as fractions.
///
/// With nothing retrieved, precision is 1 when the gold set is also empty
/// and 0 otherwise. Recall on an empty gold set is 1. F2 is 0 when both
/// precision and recall are 0.
Prf2 prf2(const ConfusionCounts& c);

/// F2 from precision and recall (fractions).
double f2_score(double precision, double recall);

struct Effectiveness {
  double value = 0.0;
  std::size_t counted = 0;
  std::vector<std::string> warnings;
};

/// Mean per-rationale recall. A rationale with an empty gold set counts as
/// 1 when nothing was predicted; otherwise it is left out with a warning.
/// Throws DataError on an empty list or when every rationale is left out.
Effectiveness effectiveness(std::span<const ConfusionCounts> counts);

/// Mean fraction of the corpus retrieved per rationale. Throws DataError
/// when `requirement_count` is 0 or the list is empty.
double cost(std::span<const ConfusionCounts> counts, std::size_t requirement_count);

/// Quantile with linear interpolation between order statistics:
/// position q * (n - 1) in the sorted list. Throws on an empty list.
double quantile_linear(std::vector<double> values, double q);

struct DistributionSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;  // ascending
};

/// Tukey box plot: fences at Q1 - 1.5 IQR and Q3 + 1.5 IQR; whiskers reach
/// the most extreme values inside the fences.
DistributionSummary boxplot_summary(std::span<const double> values);

struct RationaleRow {
  ConfusionCounts counts;
  Prf2 scores;
};

struct EvalReport {
  std::vector<RationaleRow> rows;
  ConfusionCounts totals;
  Prf2 micro;
  std::optional<double> eff;
  std::optional<double> cost;
  std::size_t rationale_count = 0;
  std::size_t requirement_count = 0;
  std::vector<std::string> warnings;
};

EvalReport build_report(std::vector<ConfusionCounts> counts, std::size_t requirement_count);

enum class ReportFormat { Csv, Markdown };

std::optional<ReportFormat> parse_format(std::string_view s);

/// Fraction as a percentage rounded half-up to one decimal, e.g. 0.08611 ->
/// "8.6".
std::string format_percent(double fraction);

/// Columns rationale_id, TP, FP, FN, P, R, F2, then footer rows "micro"
/// (summed counts), "eff" and "cost" whose value sits in the last column.
/// Undefined aggregates print "n/a".
std::string render_report(const EvalReport& report, ReportFormat format);

struct StageRow {
  std::string stage;
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  double eff = 0.0;
  double cost = 0.0;
};

StageRow stage_row(std::string stage, std::span<const ConfusionCounts> counts, std::size_t requirement_count);

/// Stage | TP | FN | FP | eff | cost, one row per pipeline stage.
std::string render_stage_table(std::span<const StageRow> rows, ReportFormat format);

}  // namespace proreficia::eval
