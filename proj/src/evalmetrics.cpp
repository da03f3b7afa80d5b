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

#include "proreficia/evalmetrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "proreficia/error.hpp"
#include "proreficia/text.hpp"

namespace proreficia::eval {

ConfusionCounts confusion(const std::set<std::string>& predicted, const std::set<std::string>& gold,
                          std::string rationale_id) {
  ConfusionCounts c{std::move(rationale_id)};
  for (const auto& p : predicted) (gold.contains(p) ? c.tp : c.fp)++;
  for (const auto& g : gold)
    if (!predicted.contains(g)) ++c.fn;
  return c;
}

double f2_score(double precision, double recall) {
  double denom = 4.0 * precision + recall;
  return denom == 0.0 ? 0.0 : 5.0 * precision * recall / denom;
}

Prf2 prf2(const ConfusionCounts& c) {
  Prf2 out;
  const auto retrieved = c.tp + c.fp;
  const auto relevant = c.tp + c.fn;
  out.precision = retrieved == 0 ? (c.fn == 0 ? 1.0 : 0.0) : static_cast<double>(c.tp) / static_cast<double>(retrieved);
  out.recall = relevant == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(relevant);
  out.f2 = f2_score(out.precision, out.recall);
  return out;
}

Effectiveness effectiveness(std::span<const ConfusionCounts> counts) {
  if (counts.empty()) throw DataError("effectiveness needs at least one rationale");
  Effectiveness out;
  double sum = 0.0;
  for (const auto& c : counts) {
    if (c.tp + c.fn == 0) {
      if (c.fp == 0) {
        sum += 1.0;
        ++out.counted;
      } else {
        out.warnings.push_back(
            fmt::format("{}: empty gold set but {} requirement(s) predicted; left out of eff", c.rationale_id, c.fp));
      }
      continue;
    }
    sum += static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    ++out.counted;
  }
  if (out.counted == 0) throw DataError("effectiveness undefined: every rationale was left out");
  out.value = sum / static_cast<double>(out.counted);
  return out;
}

double cost(std::span<const ConfusionCounts> counts, std::size_t requirement_count) {
  if (requirement_count == 0) throw DataError("cost needs a positive requirement count");
  if (counts.empty()) throw DataError("cost needs at least one rationale");
  double sum = 0.0;
  for (const auto& c : counts) sum += static_cast<double>(c.tp + c.fp) / static_cast<double>(requirement_count);
  return sum / static_cast<double>(counts.size());
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty list");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("quantile level must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DistributionSummary boxplot_summary(std::span<const double> values) {
  if (values.empty()) throw DataError("box plot of an empty list");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!std::isfinite(x)) throw DataError("box plot values must be finite");
  std::sort(v.begin(), v.end());
  DistributionSummary s;
  s.q1 = quantile_linear(v, 0.25);
  s.median = quantile_linear(v, 0.5);
  s.q3 = quantile_linear(v, 0.75);
  s.iqr = s.q3 - s.q1;
  const double low_fence = s.q1 - 1.5 * s.iqr;
  const double high_fence = s.q3 + 1.5 * s.iqr;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  bool any_inside = false;
  for (double x : v) {
    if (x < low_fence || x > high_fence) {
      s.outliers.push_back(x);
      continue;
    }
    if (!any_inside) s.whisker_low = x;
    s.whisker_high = x;
    any_inside = true;
  }
  return s;
}

EvalReport build_report(std::vector<ConfusionCounts> counts, std::size_t requirement_count) {
  EvalReport r;
  r.rationale_count = counts.size();
  r.requirement_count = requirement_count;
  r.totals.rationale_id = "micro";
  for (auto& c : counts) {
    r.totals.tp += c.tp;
    r.totals.fp += c.fp;
    r.totals.fn += c.fn;
    r.rows.push_back({c, prf2(c)});
  }
  r.micro = prf2(r.totals);
  if (!counts.empty()) {
    try {
      auto e = effectiveness(counts);
      r.eff = e.value;
      r.warnings = std::move(e.warnings);
    } catch (const DataError& e) {
      r.warnings.push_back(e.what());
    }
    if (requirement_count > 0) r.cost = cost(counts, requirement_count);
  }
  return r;
}

std::optional<ReportFormat> parse_format(std::string_view s) {
  std::string l = text::to_lower(s);
  if (l == "csv") return ReportFormat::Csv;
  if (l == "markdown" || l == "md") return ReportFormat::Markdown;
  return std::nullopt;
}

std::string format_percent(double fraction) {
  // Half-up, with an epsilon for values stored just below a .x5 boundary.
  double tenths = std::floor(fraction * 1000.0 + 0.5 + 1e-9);
  return fmt::format("{:.1f}", tenths / 10.0);
}

namespace {

std::string render_rows(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                        ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out += text::join(header, ",") + "\n";
    for (const auto& r : rows) out += text::join(r, ",") + "\n";
    return out;
  }
  out += "| " + text::join(header, " | ") + " |\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? "---|" : "---:|";
  out += "\n";
  for (const auto& r : rows) out += "| " + text::join(r, " | ") + " |\n";
  return out;
}

std::string opt_percent(const std::optional<double>& v) { return v ? format_percent(*v) : "n/a"; }

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  const std::vector<std::string> header = {"rationale_id", "TP", "FP", "FN", "P", "R", "F2"};
  std::vector<std::vector<std::string>> rows;
  auto counts_row = [](const ConfusionCounts& c, const Prf2& s) {
    return std::vector<std::string>{c.rationale_id,          std::to_string(c.tp),  std::to_string(c.fp),
                                    std::to_string(c.fn),    format_percent(s.precision),
                                    format_percent(s.recall), format_percent(s.f2)};
  };
  for (const auto& r : report.rows) rows.push_back(counts_row(r.counts, r.scores));
  if (report.rows.empty()) {
    rows.push_back({"micro", "0", "0", "0", "n/a", "n/a", "n/a"});
  } else {
    rows.push_back(counts_row(report.totals, report.micro));
  }
  rows.push_back({"eff", "", "", "", "", "", opt_percent(report.eff)});
  rows.push_back({"cost", "", "", "", "", "", opt_percent(report.cost)});
  return render_rows(header, rows, format);
}

StageRow stage_row(std::string stage, std::span<const ConfusionCounts> counts, std::size_t requirement_count) {
  StageRow row{std::move(stage)};
  for (const auto& c : counts) {
    row.tp += c.tp;
    row.fn += c.fn;
    row.fp += c.fp;
  }
  row.eff = effectiveness(counts).value;
  row.cost = cost(counts, requirement_count);
  return row;
}

std::string render_stage_table(std::span<const StageRow> rows, ReportFormat format) {
  const std::vector<std::string> header = {"Stage", "TP", "FN", "FP", "eff", "cost"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.stage, std::to_string(r.tp), std::to_string(r.fn), std::to_string(r.fp),
                     format_percent(r.eff), format_percent(r.cost)});
  return render_rows(header, cells, format);
}

}  // namespace proreficia::eval
