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

#include "proreficia/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "proreficia/ablation.hpp"
#include "proreficia/baselines.hpp"
#include "proreficia/corpus.hpp"
#include "proreficia/entailment.hpp"
#include "proreficia/error.hpp"
#include "proreficia/evalmetrics.hpp"
#include "proreficia/llmclient.hpp"
#include "proreficia/pipeline.hpp"
#include "proreficia/promptkit.hpp"
#include "proreficia/text.hpp"

#ifndef PROREFICIA_TEMPLATE_DIR
#define PROREFICIA_TEMPLATE_DIR "templates"
#endif

namespace proreficia::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LlmOptions {
  std::string replay = "off";
  std::string replay_dir;
  std::string model = "llama3-405b";
  std::int64_t seed = 16;
  double temperature = 0.0;
  std::string url;
  std::string path = "/v1/chat/completions";
  std::string key_env = "OPENAI_API_KEY";
};

struct EmbedOptions {
  std::string kind = "hashing";
  std::size_t dimension = 256;
  std::string url;
  std::string model = "text-embedding-3-large";
  std::string key_env = "OPENAI_API_KEY";
};

struct Options {
  std::string dataset;
  std::string out;
  std::string templates = PROREFICIA_TEMPLATE_DIR;
  std::string rationale;
  int parallel = 1;
  std::string format = "csv";

  // run
  std::string prompt_id = "P30";
  bool no_refinement = false;
  bool no_filtering = false;
  std::size_t batch_tokens = 100000;
  std::string ranking_fallback = "retry";
  int repeat = 1;
  std::string entailment = "lexical";
  double threshold = 0.2;
  std::string measure = "jaccard";
  std::string nli_url;
  std::string nli_token_env = "NLI_SERVICE_TOKEN";
  double nli_learning_rate = 2e-2;
  bool timings = false;

  // baselines
  std::string strategy = "t2";
  double theta = 0.5;
  std::string scores;
  std::size_t k = 0;
  bool grid = false;
  std::string cot_template;

  // eval
  std::string run_dir;
  bool stages = false;
  std::string robustness;

  // ablate
  std::string table;
  std::vector<std::string> columns;
  bool per_rationale = false;
  int estimators = 40;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::uint64_t gbdt_seed = 42;
  std::vector<std::size_t> elbow;

  // record
  std::string store;
  std::string prompt_file;
  std::string response_file;
  std::uint32_t attempt = 0;

  LlmOptions llm;
  EmbedOptions embed;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void add_llm_options(CLI::App* cmd, LlmOptions& o) {
  cmd->add_option("--replay", o.replay, "Replay mode")
      ->check(CLI::IsMember({"off", "record", "replay", "strict"}))
      ->capture_default_str();
  cmd->add_option("--replay-dir", o.replay_dir, "Replay store (default: <dataset dir>/replay)");
  cmd->add_option("--model", o.model, "Model name sent to the chat endpoint")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
  cmd->add_option("--llm-url", o.url, "Base URL of the chat-completions endpoint");
  cmd->add_option("--llm-path", o.path, "Request path")->capture_default_str();
  cmd->add_option("--llm-key-env", o.key_env, "Environment variable holding the API key")->capture_default_str();
}

void add_embed_options(CLI::App* cmd, EmbedOptions& o) {
  cmd->add_option("--embedder", o.kind, "Embedding backend")
      ->check(CLI::IsMember({"hashing", "http"}))
      ->capture_default_str();
  cmd->add_option("--embed-dim", o.dimension, "Hashing embedder dimension")->capture_default_str();
  cmd->add_option("--embed-url", o.url, "Base URL of the embeddings endpoint");
  cmd->add_option("--embed-model", o.model, "Embedding model")->capture_default_str();
  cmd->add_option("--embed-key-env", o.key_env, "Environment variable holding the API key")->capture_default_str();
}

llm::SamplingParams sampling(const LlmOptions& o) {
  llm::SamplingParams p;
  p.seed = o.seed;
  p.temperature = o.temperature;
  return p;
}

fs::path replay_dir(const Options& opts) {
  if (!opts.llm.replay_dir.empty()) return opts.llm.replay_dir;
  if (!opts.dataset.empty() && fs::is_directory(opts.dataset)) return fs::path(opts.dataset) / "replay";
  throw DataError("--replay-dir is required when the dataset is not a directory");
}

std::shared_ptr<llm::ChatBackend> make_chat_backend(const Options& opts) {
  std::shared_ptr<llm::ChatBackend> live;
  if (!opts.llm.url.empty())
    live = std::make_shared<llm::HttpChatBackend>(llm::HttpEndpoint{opts.llm.url, opts.llm.path, opts.llm.key_env});
  if (opts.llm.replay == "off") {
    if (!live) throw DataError("--llm-url is required without a replay store");
    return live;
  }
  auto mode = *llm::parse_replay_mode(opts.llm.replay);
  if (mode == llm::ReplayMode::Record && !live) throw DataError("--replay record needs --llm-url");
  auto store = std::make_shared<llm::ReplayStore>(replay_dir(opts));
  return std::make_shared<llm::ReplayBackend>(store, mode, mode == llm::ReplayMode::StrictReplay ? nullptr : live);
}

std::unique_ptr<baselines::Embedder> make_embedder(const EmbedOptions& o) {
  if (o.kind == "http") {
    if (o.url.empty()) throw DataError("--embed-url is required for the http embedder");
    baselines::EmbeddingEndpoint ep;
    ep.base_url = o.url;
    ep.model = o.model;
    ep.api_key_env = o.key_env;
    return std::make_unique<baselines::HttpEmbedder>(ep);
  }
  return std::make_unique<baselines::HashingEmbedder>(o.dimension);
}

std::vector<const corpus::ChangeRationale*> selected_rationales(const corpus::Dataset& ds, const Options& opts) {
  std::vector<const corpus::ChangeRationale*> out;
  if (!opts.rationale.empty()) {
    out.push_back(&ds.rationale(opts.rationale));
    return out;
  }
  for (const auto& c : ds.rationales()) out.push_back(&c);
  return out;
}

eval::ReportFormat report_format(const Options& opts) { return *eval::parse_format(opts.format); }

// --- subcommands -----------------------------------------------------------

int cmd_validate(const Options& opts, std::ostream& out) {
  auto ds = corpus::load_dataset(opts.dataset);
  out << fmt::format("{}: {} requirements, {} change rationales", ds.name(), ds.requirement_count(),
                     ds.rationale_count());
  if (ds.has_gold()) {
    auto st = corpus::gold_stats(ds);
    out << fmt::format(", {} impacted requirements ({}%)", st.impacted_count,
                       eval::format_percent(st.impacted_fraction));
  } else {
    out << ", no gold impact sets";
  }
  out << "\n";
  return kOk;
}

int cmd_prompts(std::ostream& out) {
  for (const auto& p : prompt::enumerate_prompts()) {
    std::vector<std::string> ds;
    for (int d : p.details()) ds.push_back(std::to_string(d));
    out << p.id() << ": {" << text::join(ds, ",") << "}\n";
  }
  return kOk;
}

pipeline::PipelineConfig pipeline_config(const Options& opts) {
  pipeline::PipelineConfig cfg;
  cfg.prompt_id = opts.prompt_id;
  cfg.refinement = !opts.no_refinement;
  cfg.filtering = !opts.no_filtering;
  cfg.batch_token_budget = opts.batch_tokens;
  cfg.repetitions = opts.repeat;
  cfg.ranking_fallback =
      opts.ranking_fallback == "input-order" ? pipeline::RankingFallback::InputOrder : pipeline::RankingFallback::Retry;
  cfg.model = opts.llm.model;
  cfg.params = sampling(opts.llm);
  pipeline::validate(cfg);
  return cfg;
}

int cmd_run(const Options& opts, std::ostream& out, std::ostream& err) {
  auto ds = corpus::load_dataset(opts.dataset);
  auto catalog = prompt::DetailTextCatalog::load(opts.templates);
  auto chat = make_chat_backend(opts);
  const fs::path out_dir = opts.out.empty() ? fs::path("runs") : fs::path(opts.out);
  auto rationales = selected_rationales(ds, opts);

  entailment::OverlapMeasure measure =
      opts.measure == "coverage" ? entailment::OverlapMeasure::HypothesisCoverage : entailment::OverlapMeasure::Jaccard;
  entailment::LexicalEntailment lexical(opts.threshold, measure);
  entailment::BackendLabelSource lexical_labels(lexical);

  for (int rep = 0; rep < opts.repeat; ++rep) {
    auto cfg = pipeline_config(opts);
    cfg.attempt_base = static_cast<std::uint32_t>(rep);
    pipeline::StageContext ctx{ds, catalog, *chat, cfg};
    const fs::path dir = opts.repeat > 1 ? out_dir / fmt::format("rep{}", rep + 1) : out_dir;

    std::vector<pipeline::RunResult> results;
    if (opts.entailment == "service" && cfg.filtering) {
      if (!opts.rationale.empty()) throw DataError("--rationale cannot be combined with leave-one-out entailment");
      if (opts.nli_url.empty()) throw DataError("--nli-url is required for --entailment service");
      entailment::HttpNliService service({opts.nli_url, opts.nli_token_env});
      if (!service.health()) throw BackendError(fmt::format("NLI service at {} is not healthy", opts.nli_url), true);
      entailment::TrainHyperparams hp;
      hp.learning_rate = opts.nli_learning_rate;
      results = pipeline::run_all_loo(ctx, service, hp, opts.parallel);
    } else if (opts.rationale.empty()) {
      results = pipeline::run_all(ctx, &lexical_labels, opts.parallel);
    } else {
      results.push_back(pipeline::run(*rationales.front(), ctx, &lexical_labels));
    }

    for (const auto& r : results) {
      pipeline::write_artifacts(dir, r, opts.timings);
      out << fmt::format("{}: initial {}, refined {}, final {} -> {}\n", r.rationale_id, r.initial.size(),
                         r.refined.size(), r.final_set.size(), (dir / r.rationale_id / "impact_set.json").string());
      const std::size_t warnings =
          r.trace.warnings.size() + std::accumulate(r.trace.calls.begin(), r.trace.calls.end(), std::size_t{0},
                                                    [](std::size_t n, const auto& c) { return n + c.warnings.size(); });
      if (warnings > 0) err << fmt::format("{}: {} warning(s), see warnings.log\n", r.rationale_id, warnings);
    }
  }
  return kOk;
}

void write_baseline(const fs::path& out_dir, const baselines::BaselineResult& r) {
  std::vector<pipeline::StageSnapshot> stages{{"final", &r.impact}};
  pipeline::write_run_files(out_dir, r.rationale_id, pipeline::impact_set_document(r.rationale_id, r.impact, nullptr),
                            stages, r.trace);
}

int cmd_baseline_sim(const Options& opts, std::ostream& out) {
  auto strategy = *baselines::parse_cutoff(opts.strategy);
  if (!opts.scores.empty()) {
    std::vector<baselines::ScoredRequirement> scores;
    auto content = read_file(opts.scores);
    auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto line = text::trim(lines[i]);
      if (line.empty() || (i == 0 && text::to_lower(line).starts_with("req_id"))) continue;
      auto comma = line.find(',');
      if (comma == std::string_view::npos) throw DataError(fmt::format("{}:{}: expected id,score", opts.scores, i + 1));
      try {
        scores.push_back({std::string(text::trim(line.substr(0, comma))),
                          std::stod(std::string(text::trim(line.substr(comma + 1))))});
      } catch (const std::exception&) {
        throw DataError(fmt::format("{}:{}: bad score", opts.scores, i + 1));
      }
    }
    for (const auto& id : baselines::apply_cutoff(baselines::sort_ranking(std::move(scores)), strategy, opts.theta))
      out << id << "\n";
    return kOk;
  }

  if (opts.dataset.empty()) throw DataError("baseline sim needs --dataset or --scores");
  auto ds = corpus::load_dataset(opts.dataset);
  auto embedder = make_embedder(opts.embed);
  for (const auto* c : selected_rationales(ds, opts)) {
    auto ranking = baselines::rank_by_similarity(*c, ds, *embedder);
    auto ids = baselines::apply_cutoff(ranking, strategy, opts.theta);
    out << c->id << ": " << text::join(ids, ",") << "\n";
    if (!opts.out.empty()) {
      baselines::BaselineResult r{c->id, {}, {}};
      r.trace.rationale_id = c->id;
      for (const auto& id : ids) r.impact.add({id, "", CandidateOrigin::Initial});
      write_baseline(opts.out, r);
    }
  }
  return kOk;
}

int cmd_baseline_iter(const Options& opts, std::ostream& out) {
  auto ds = corpus::load_dataset(opts.dataset);
  auto catalog = prompt::DetailTextCatalog::load(opts.templates);
  auto chat = make_chat_backend(opts);
  auto cfg = pipeline_config(opts);
  pipeline::StageContext ctx{ds, catalog, *chat, cfg};
  for (const auto* c : selected_rationales(ds, opts)) {
    auto r = baselines::iterative_baseline(*c, ctx, opts.parallel);
    out << c->id << ": " << text::join(r.impact.ids(), ",") << "\n";
    if (!opts.out.empty()) write_baseline(opts.out, r);
  }
  return kOk;
}

int cmd_baseline_cot(const Options& opts, std::ostream& out) {
  auto ds = corpus::load_dataset(opts.dataset);
  auto chat = make_chat_backend(opts);
  auto embedder = make_embedder(opts.embed);
  baselines::CotSettings settings;
  settings.pair_template = prompt::read_template(
      opts.cot_template.empty() ? fs::path(opts.templates) / "cot_pair.txt" : fs::path(opts.cot_template));
  settings.model = opts.llm.model;
  settings.params = sampling(opts.llm);
  settings.parallel = opts.parallel;

  auto rationales = selected_rationales(ds, opts);
  std::vector<baselines::SimilarityRanking> rankings;
  for (const auto* c : rationales) rankings.push_back(baselines::rank_by_similarity(*c, ds, *embedder));

  auto run_k = [&](std::size_t k) {
    std::vector<baselines::BaselineResult> results;
    for (std::size_t i = 0; i < rationales.size(); ++i)
      results.push_back(baselines::cot_baseline(*rationales[i], ds, rankings[i], k, *chat, settings));
    return results;
  };

  std::size_t k = opts.k;
  if (opts.grid) {
    if (!ds.has_gold()) throw DataError("--grid needs gold impact sets");
    auto grid = baselines::default_k_grid(ds.requirement_count());
    auto result = baselines::cot_grid_search(grid, [&](std::size_t kk) {
      eval::ConfusionCounts total;
      for (const auto& r : run_k(kk)) {
        auto c = eval::confusion(r.impact.id_set(), ds.gold_for(r.rationale_id));
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
      }
      return eval::prf2(total).f2;
    });
    for (const auto& p : result.points) out << fmt::format("k={} F2={}\n", p.k, eval::format_percent(p.f2));
    out << fmt::format("best k={}\n", result.best_k);
    k = result.best_k;
  }
  if (k == 0) throw DataError("baseline cot needs --k or --grid");
  for (const auto& r : run_k(k)) {
    out << r.rationale_id << ": " << text::join(r.impact.ids(), ",") << "\n";
    if (!opts.out.empty()) write_baseline(opts.out, r);
  }
  return kOk;
}

int cmd_eval(const Options& opts, std::ostream& out, std::ostream& err) {
  const auto format = report_format(opts);
  if (opts.run_dir.empty() && opts.robustness.empty()) throw DataError("eval needs --run-dir or --robustness");

  if (!opts.run_dir.empty()) {
    if (opts.dataset.empty()) throw DataError("eval --run-dir needs --dataset");
    auto ds = corpus::load_dataset(opts.dataset);
    if (!ds.has_gold()) throw DataError(fmt::format("dataset {} has no gold impact sets", ds.name()));

    std::vector<std::string> stage_order;
    std::map<std::string, std::vector<eval::ConfusionCounts>> by_stage;
    for (const auto& c : ds.rationales()) {
      auto stages = pipeline::read_stages(fs::path(opts.run_dir) / c.id);
      for (const auto& [name, ids] : stages) {
        if (std::find(stage_order.begin(), stage_order.end(), name) == stage_order.end()) stage_order.push_back(name);
        for (const auto& id : ids)
          if (!ds.has_requirement(id)) throw DataError(fmt::format("{}: unknown requirement {}", c.id, id));
        by_stage[name].push_back(eval::confusion({ids.begin(), ids.end()}, ds.gold_for(c.id), c.id));
      }
    }
    if (!by_stage.contains("final")) throw DataError(fmt::format("{}: no final stage found", opts.run_dir));

    if (opts.stages) {
      std::vector<eval::StageRow> rows;
      for (const auto& name : stage_order) {
        if (by_stage[name].size() != ds.rationale_count())
          throw DataError(fmt::format("stage {} is missing for some rationales", name));
        rows.push_back(eval::stage_row(name, by_stage[name], ds.requirement_count()));
      }
      out << eval::render_stage_table(rows, format);
    } else {
      auto report = eval::build_report(by_stage["final"], ds.requirement_count());
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      out << eval::render_report(report, format);
    }
  }

  if (!opts.robustness.empty()) {
    auto content = read_file(opts.robustness);
    auto lines = text::split_lines(content);
    if (lines.empty()) throw DataError(fmt::format("{}: empty table", opts.robustness));
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
    auto header = split(lines[0]);
    std::vector<std::vector<double>> columns(header.size());
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (text::trim(lines[ln]).empty()) continue;
      auto cells = split(lines[ln]);
      if (cells.size() != header.size()) throw DataError(fmt::format("{}:{}: ragged row", opts.robustness, ln + 1));
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!header[i].ends_with("_f2")) continue;
        try {
          columns[i].push_back(std::stod(cells[i]));
        } catch (const std::exception&) {
          throw DataError(fmt::format("{}:{}: '{}' is not a number", opts.robustness, ln + 1, cells[i]));
        }
      }
    }
    const std::vector<std::string> cols = {"column", "median", "Q1", "Q3", "IQR", "whisker_low", "whisker_high",
                                           "outliers"};
    const std::string sep = format == eval::ReportFormat::Csv ? "," : " | ";
    auto emit = [&](const std::vector<std::string>& cells) {
      out << (format == eval::ReportFormat::Csv ? "" : "| ") << text::join(cells, sep)
          << (format == eval::ReportFormat::Csv ? "\n" : " |\n");
    };
    emit(cols);
    if (format == eval::ReportFormat::Markdown) out << "|---|---:|---:|---:|---:|---:|---:|---|\n";
    auto num = [](double v) { return fmt::format("{:.2f}", v); };
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!header[i].ends_with("_f2")) continue;
      auto s = eval::boxplot_summary(columns[i]);
      std::vector<std::string> outl;
      for (double v : s.outliers) outl.push_back(num(v));
      emit({header[i], num(s.median), num(s.q1), num(s.q3), num(s.iqr), num(s.whisker_low), num(s.whisker_high),
            text::join(outl, " ")});
    }
  }
  return kOk;
}

int cmd_ablate(const Options& opts, std::ostream& out) {
  const auto format = report_format(opts);
  std::vector<std::string> columns = opts.columns;
  if (columns.empty()) {
    auto content = read_file(opts.table);
    auto lines = text::split_lines(content);
    if (lines.empty()) throw DataError(fmt::format("{}: empty table", opts.table));
    std::string_view header = lines[0];
    std::size_t start = 0;
    while (true) {
      auto comma = header.find(',', start);
      std::string name(text::trim(header.substr(start, comma - start)));
      if (name.ends_with("_f2") || name == "f2") columns.push_back(name);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (columns.empty()) throw DataError(fmt::format("{}: no F2 columns; pass --column", opts.table));
  }
  ablation::GbdtParams params;
  params.n_estimators = opts.estimators;
  params.learning_rate = opts.learning_rate;
  params.max_depth = opts.max_depth;
  params.seed = opts.gbdt_seed;
  const auto mode = opts.per_rationale ? ablation::RowMode::PerRationale : ablation::RowMode::PerPrompt;

  bool first = true;
  for (const auto& col : columns) {
    auto data = ablation::load_f2_csv(opts.table, col, mode);
    auto p = params;
    if (!opts.elbow.empty()) {
      p.n_estimators = static_cast<int>(ablation::elbow_select(data, opts.elbow, params));
      if (format == eval::ReportFormat::Markdown) out << fmt::format("<!-- {}: elbow n = {} -->\n", col, p.n_estimators);
    }
    auto report = ablation::analyze(data, p, col);
    if (format == eval::ReportFormat::Csv) {
      if (first) out << "column,";
      auto body = ablation::render_importance(report, format);
      auto lines = text::split_lines(body);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i == 0) {
          if (first) out << lines[i] << "\n";
          continue;
        }
        out << col << "," << lines[i] << "\n";
      }
    } else {
      if (!first) out << "\n";
      out << ablation::render_importance(report, format);
    }
    first = false;
  }
  return kOk;
}

int cmd_record(const Options& opts, std::ostream& out) {
  llm::ChatRequest req{opts.llm.model, read_file(opts.prompt_file), sampling(opts.llm), opts.attempt};
  std::string response = read_file(opts.response_file);
  llm::ReplayStore store(opts.store);
  const auto digest = llm::request_digest(req);
  store.put(digest, response);
  out << digest << "\n";
  return kOk;
}

/// Replaces "--config <file>" with the file's top-level keys as flags,
/// skipping keys already given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].starts_with("--config=")) {
      file = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (file.empty()) return kept;

  auto given = [&](const std::string& flag) {
    return std::any_of(kept.begin(), kept.end(),
                       [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
  };
  for (const auto& item : CLI::ConfigTOML().from_file(file)) {
    if (!item.parents.empty() || item.name == "++" || item.name == "--") continue;
    const std::string flag = "--" + item.name;
    if (given(flag)) continue;
    if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
      if (item.inputs[0] == "true") kept.push_back(flag);
      continue;
    }
    for (const auto& value : item.inputs) {
      kept.push_back(flag);
      kept.push_back(value);
    }
  }
  return kept;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opts;
  CLI::App app{"Requirements change impact analysis with prompted LLM passes", "proreficia"};
  std::string config_file;
  app.add_option("--config", config_file, "Read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
  dataset->require_subcommand(1);
  auto* validate = dataset->add_subcommand("validate", "Check a dataset document");
  validate->add_option("--dataset", opts.dataset, "Dataset file or directory")->required();

  auto* prompts = app.add_subcommand("prompts", "Prompt catalog");
  prompts->require_subcommand(1);
  auto* list = prompts->add_subcommand("list", "List the 64 prompt variants");

  auto* run = app.add_subcommand("run", "Run the impact analysis pipeline");
  run->add_option("--dataset", opts.dataset, "Dataset file or directory")->required();
  run->add_option("--prompt", opts.prompt_id, "Prompt variant P1..P64")->capture_default_str();
  run->add_option("--rationale", opts.rationale, "Only this change rationale");
  run->add_option("--out", opts.out, "Output directory")->capture_default_str();
  run->add_option("--templates", opts.templates, "Template directory")->capture_default_str();
  run->add_option("--parallel", opts.parallel, "Rationales processed concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--no-refinement", opts.no_refinement, "Skip the refinement pass");
  run->add_flag("--no-filtering", opts.no_filtering, "Skip ranking and selection");
  run->add_option("--batch-tokens", opts.batch_tokens, "Token budget per impact prompt")->capture_default_str();
  run->add_option("--ranking-fallback", opts.ranking_fallback, "On unreadable ranking output")
      ->check(CLI::IsMember({"retry", "input-order"}))
      ->capture_default_str();
  run->add_option("--repeat", opts.repeat, "Repetitions (written to rep<N>/)")->check(CLI::PositiveNumber);
  run->add_option("--entailment", opts.entailment, "Entailment backend")
      ->check(CLI::IsMember({"lexical", "service"}))
      ->capture_default_str();
  run->add_option("--threshold", opts.threshold, "Lexical overlap threshold")->capture_default_str();
  run->add_option("--measure", opts.measure, "Lexical overlap measure")
      ->check(CLI::IsMember({"jaccard", "coverage"}))
      ->capture_default_str();
  run->add_option("--nli-url", opts.nli_url, "Base URL of the NLI service");
  run->add_option("--nli-token-env", opts.nli_token_env, "Environment variable holding the NLI token")
      ->capture_default_str();
  run->add_option("--nli-learning-rate", opts.nli_learning_rate, "Classifier learning rate")->capture_default_str();
  run->add_flag("--timings", opts.timings, "Record call latencies in trace.json");
  add_llm_options(run, opts.llm);

  auto* baseline = app.add_subcommand("baseline", "Comparison systems");
  baseline->require_subcommand(1);
  auto* sim = baseline->add_subcommand("sim", "Embedding similarity with a cutoff");
  sim->add_option("--dataset", opts.dataset, "Dataset file or directory");
  sim->add_option("--scores", opts.scores, "CSV of req_id,score instead of a dataset");
  sim->add_option("--strategy", opts.strategy, "Cutoff strategy")
      ->check(CLI::IsMember({"t1", "t2", "t3"}, CLI::ignore_case))
      ->capture_default_str();
  sim->add_option("--theta", opts.theta, "T1 threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--rationale", opts.rationale, "Only this change rationale");
  sim->add_option("--out", opts.out, "Write impact sets here");
  add_embed_options(sim, opts.embed);

  auto* iter = baseline->add_subcommand("iter", "One prompt per requirement");
  iter->add_option("--dataset", opts.dataset, "Dataset file or directory")->required();
  iter->add_option("--prompt", opts.prompt_id, "Prompt variant")->capture_default_str();
  iter->add_option("--rationale", opts.rationale, "Only this change rationale");
  iter->add_option("--templates", opts.templates, "Template directory")->capture_default_str();
  iter->add_option("--parallel", opts.parallel, "Concurrent calls")->check(CLI::PositiveNumber);
  iter->add_option("--out", opts.out, "Write impact sets here");
  add_llm_options(iter, opts.llm);

  auto* cot = baseline->add_subcommand("cot", "Retrieve top-k, then ask a yes/no question per pair");
  cot->add_option("--dataset", opts.dataset, "Dataset file or directory")->required();
  cot->add_option("--k", opts.k, "Retrieved requirements per rationale")->check(CLI::PositiveNumber);
  cot->add_flag("--grid", opts.grid, "Pick k from 5, 10, ... by micro F2 against gold");
  cot->add_option("--rationale", opts.rationale, "Only this change rationale");
  cot->add_option("--templates", opts.templates, "Template directory")->capture_default_str();
  cot->add_option("--cot-template", opts.cot_template, "Pair prompt template file");
  cot->add_option("--parallel", opts.parallel, "Concurrent calls")->check(CLI::PositiveNumber);
  cot->add_option("--out", opts.out, "Write impact sets here");
  add_llm_options(cot, opts.llm);
  add_embed_options(cot, opts.embed);

  auto* evalc = app.add_subcommand("eval", "Score run artifacts against gold");
  evalc->add_option("--dataset", opts.dataset, "Dataset file or directory");
  evalc->add_option("--run-dir", opts.run_dir, "Directory written by run or baseline --out");
  evalc->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "markdown", "md"}))
      ->capture_default_str();
  evalc->add_flag("--stages", opts.stages, "Per-stage table instead of per-rationale rows");
  evalc->add_option("--robustness", opts.robustness, "Box-plot summary of the *_f2 columns of a table");

  auto* ablate = app.add_subcommand("ablate", "Prompt-detail importance via gradient boosting");
  ablate->add_option("--table", opts.table, "CSV with combination and F2 columns")->required();
  ablate->add_option("--column", opts.columns, "Target column (repeatable; default: every *_f2 column)");
  ablate->add_flag("--per-rationale", opts.per_rationale, "Keep one row per CSV line");
  ablate->add_option("--estimators", opts.estimators, "Number of trees")->capture_default_str();
  ablate->add_option("--learning-rate", opts.learning_rate, "Shrinkage")->capture_default_str();
  ablate->add_option("--max-depth", opts.max_depth, "Tree depth")->capture_default_str();
  ablate->add_option("--seed", opts.gbdt_seed, "Random state")->capture_default_str();
  ablate->add_option("--elbow", opts.elbow, "Estimator grid for the elbow scan")->delimiter(',');
  ablate->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "markdown", "md"}))
      ->capture_default_str();

  auto* record = app.add_subcommand("record", "Store a response in a replay directory");
  record->add_option("--store", opts.store, "Replay directory")->required();
  record->add_option("--prompt-file", opts.prompt_file, "Prompt text")->required();
  record->add_option("--response-file", opts.response_file, "Response text")->required();
  record->add_option("--attempt", opts.attempt, "Attempt index")->capture_default_str();
  record->add_option("--model", opts.llm.model, "Model name")->capture_default_str();
  record->add_option("--seed", opts.llm.seed, "Sampling seed")->capture_default_str();
  record->add_option("--temperature", opts.llm.temperature, "Sampling temperature")->capture_default_str();

  try {
    auto expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(opts, out);
    if (list->parsed()) return cmd_prompts(out);
    if (run->parsed()) return cmd_run(opts, out, err);
    if (sim->parsed()) return cmd_baseline_sim(opts, out);
    if (iter->parsed()) return cmd_baseline_iter(opts, out);
    if (cot->parsed()) return cmd_baseline_cot(opts, out);
    if (evalc->parsed()) return cmd_eval(opts, out, err);
    if (ablate->parsed()) return cmd_ablate(opts, out);
    if (record->parsed()) return cmd_record(opts, out);
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackendError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace proreficia::cli
