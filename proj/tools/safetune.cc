// Copyright 2026 The Safetune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// safetune: build, expand, split and evaluate traffic-safety instruction
// datasets, and plan partial fine-tuning runs.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli_config.h"
#include "nlohmann/json.hpp"
#include "safetune/corpus_ingest.h"
#include "safetune/dataset.h"
#include "safetune/error.h"
#include "safetune/eval_harness.h"
#include "safetune/generator.h"
#include "safetune/metrics.h"
#include "safetune/train_plan.h"

namespace safetune::cli {
namespace {

using nlohmann::ordered_json;

enum ExitCode { kOk = 0, kDataError = 1, kEndpointError = 2, kUsageError = 3 };

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "table";
  Config config;
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes to `path`, or stdout when it is empty or "-".
void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

DatasetFormat FormatFromName(const std::string& name) {
  return name == "array" ? DatasetFormat::kInstructionArray
                         : DatasetFormat::kRecordLines;
}

ReportFormat OutputFormat(const Globals& g) {
  return *ParseReportFormat(g.format);
}

std::string Fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// --- ingest -------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string output_format = "lines";
};

int RunIngest(const Globals& g, const IngestArgs& a) {
  std::vector<GuidebookEntry> entries;
  for (const auto& path : a.inputs) {
    try {
      auto more = parse_guidebook(ReadText(path));
      entries.insert(entries.end(), more.begin(), more.end());
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), e.index());
    }
  }
  const auto records = to_records(entries, g.config.personas, g.config.templates);
  Emit(a.output, serialize_dataset(records, FormatFromName(a.output_format)));
  std::cerr << "ingested " << records.size() << " records\n";
  return kOk;
}

// --- generate -----------------------------------------------------------

struct GenerateArgs {
  std::string seeds;
  std::string seeds_format = "lines";
  std::string output;
  std::string replay;
  std::optional<std::size_t> target;
  std::optional<std::size_t> k;
  std::optional<std::size_t> max_requests;
  std::optional<std::size_t> max_in_flight;
  std::optional<double> threshold;
  std::optional<double> temperature;
};

int RunGenerate(const Globals& g, const GenerateArgs& a) {
  const auto seeds = load_dataset(a.seeds, FormatFromName(a.seeds_format));
  GenerationConfig cfg = g.config.generation;
  if (g.seed_set) cfg.seed = g.seed;
  if (a.target) cfg.target_count = *a.target;
  if (a.k) cfg.seeds_per_prompt = *a.k;
  if (a.max_requests) cfg.max_requests = *a.max_requests;
  if (a.max_in_flight) cfg.max_in_flight = *a.max_in_flight;
  if (a.threshold) cfg.dedup_threshold = *a.threshold;
  if (a.temperature) cfg.temperature = *a.temperature;

  ChatClient client(g.config.endpoint, MakeTransport(g.config, a.replay),
                    g.config.retry);
  try {
    const auto records = generate_dataset(seeds, cfg, client);
    Emit(a.output, serialize_dataset(records));
    std::cerr << "generated " << records.size() << " records\n";
    return kOk;
  } catch (const PartialGenerationError& e) {
    Emit(a.output, serialize_dataset(e.accepted()));
    throw;
  } catch (const GenerationEndpointError& e) {
    Emit(a.output, serialize_dataset(e.accepted()));
    throw;
  }
}

// --- stats --------------------------------------------------------------

struct StatsArgs {
  std::string input;
  std::string input_format = "lines";
};

template <typename Map>
void AddRows(std::vector<std::array<std::string, 3>>& rows,
             const std::string& group, const Map& m) {
  for (const auto& [k, v] : m) rows.push_back({group, std::string(ToString(k)), std::to_string(v)});
}

int RunStats(const Globals& g, const StatsArgs& a) {
  const DatasetStats s = stats(load_dataset(a.input, FormatFromName(a.input_format)));
  std::vector<std::array<std::string, 3>> rows;
  rows.push_back({"total", "", std::to_string(s.total)});
  AddRows(rows, "source", s.by_source);
  AddRows(rows, "task_type", s.by_task);
  AddRows(rows, "provenance", s.by_provenance);

  std::ostringstream out;
  switch (OutputFormat(g)) {
    case ReportFormat::kCsv:
      out << "breakdown,label,count\n";
      for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << '\n';
      break;
    case ReportFormat::kStructured: {
      ordered_json j;
      j["total"] = s.total;
      for (const auto& r : rows) {
        if (r[0] != "total") j["by_" + r[0]][r[1]] = std::stoull(r[2]);
      }
      out << j.dump(2) << '\n';
      break;
    }
    case ReportFormat::kTable: {
      std::string group;
      for (const auto& [breakdown, label, count] : rows) {
        if (breakdown != "total" && breakdown != group) out << breakdown << '\n';
        group = breakdown;
        const std::string name = breakdown == "total" ? "total" : "  " + label;
        out << name << std::string(20 - name.size(), ' ') << count << '\n';
      }
      break;
    }
  }
  Emit("", out.str());
  return kOk;
}

// --- split --------------------------------------------------------------

struct SplitArgs {
  std::string input;
  std::string input_format = "lines";
  double fraction = 0.8;
  std::string train;
  std::string test;
};

int RunSplit(const Globals& g, const SplitArgs& a) {
  const auto records = load_dataset(a.input, FormatFromName(a.input_format));
  const DatasetSplit s = split(records, a.fraction, g.seed);
  save_dataset(a.train, s.train);
  save_dataset(a.test, s.test);
  std::cerr << "train " << s.train.size() << ", test " << s.test.size() << '\n';
  return kOk;
}

// --- score --------------------------------------------------------------

struct ScoreArgs {
  std::string candidate;
  std::string reference;
  std::string candidate_file;
  std::string reference_file;
};

int RunScore(const Globals& g, const ScoreArgs& a) {
  const std::string cand =
      a.candidate_file.empty() ? a.candidate : ReadText(a.candidate_file);
  const std::string ref =
      a.reference_file.empty() ? a.reference : ReadText(a.reference_file);
  std::string name;
  auto emb = MakeEmbeddings(g.config.embeddings, g.config.retry, &name);
  auto bleurt = MakeBleurt(g.config.bleurt, g.config.retry);
  const ScoreSet s = score_pair(cand, ref, g.config.metrics, *emb, bleurt.get());

  const std::vector<std::pair<std::string, std::optional<double>>> rows = {
      {"bleu", s.bleu},
      {"rouge1_p", s.rouge1.precision}, {"rouge1_r", s.rouge1.recall}, {"rouge1_f", s.rouge1.f1},
      {"rouge2_p", s.rouge2.precision}, {"rouge2_r", s.rouge2.recall}, {"rouge2_f", s.rouge2.f1},
      {"rougeL_p", s.rougeL.precision}, {"rougeL_r", s.rougeL.recall}, {"rougeL_f", s.rougeL.f1},
      {"bert_p", s.bert.precision},     {"bert_r", s.bert.recall},     {"bert_f", s.bert.f1},
      {"bleurt", s.bleurt},
      {"word_count", static_cast<double>(s.word_count)},
  };
  std::ostringstream out;
  switch (OutputFormat(g)) {
    case ReportFormat::kStructured: {
      ordered_json j;
      for (const auto& [k, v] : rows) j[k] = v ? ordered_json(*v) : ordered_json();
      out << j.dump(2) << '\n';
      break;
    }
    case ReportFormat::kCsv:
      out << "metric,value\n";
      for (const auto& [k, v] : rows) out << k << ',' << (v ? Fixed2(*v) : "") << '\n';
      break;
    case ReportFormat::kTable:
      for (const auto& [k, v] : rows) {
        out << k << std::string(12 - k.size(), ' ')
            << (v ? Fixed2(*v) : "\xE2\x80\x94") << '\n';
      }
      break;
  }
  Emit("", out.str());
  return kOk;
}

// --- eval ---------------------------------------------------------------

struct EvalArgs {
  std::string items;
  std::vector<std::string> outputs;
  bool collect = false;
  std::string system = "live";
  std::string replay;
  std::string save_outputs;
  bool strict = false;
  std::string timestamp;
  std::string output;
};

int RunEval(const Globals& g, const EvalArgs& a) {
  const auto items = load_eval_items(a.items);
  std::vector<SystemOutputs> systems;
  for (const auto& path : a.outputs) {
    for (auto& s : load_outputs(path)) systems.push_back(std::move(s));
  }
  if (a.collect) {
    ChatClient client(g.config.endpoint, MakeTransport(g.config, a.replay),
                      g.config.retry);
    std::vector<SystemOutput> got;
    try {
      got = collect_outputs(items, client, a.system,
                            g.config.generation.max_in_flight);
    } catch (const CollectionError& e) {
      if (!a.save_outputs.empty()) Emit(a.save_outputs, serialize_outputs(e.outputs()));
      throw;
    }
    if (!a.save_outputs.empty()) Emit(a.save_outputs, serialize_outputs(got));
    systems.push_back({a.system, std::move(got)});
  }
  if (systems.empty()) throw InvalidArgument("eval: give --outputs or --collect");

  EvalOptions opts;
  opts.metrics = g.config.metrics;
  if (g.config.idf) {
    std::vector<TokenSequence> docs;
    for (const auto& it : items) {
      docs.push_back(tokenize(it.reference, opts.metrics.normalization));
    }
    opts.metrics.use_idf = true;
    opts.metrics.idf = compute_idf(docs);
  }
  auto emb = MakeEmbeddings(g.config.embeddings, g.config.retry, &opts.embeddings_name);
  auto bleurt = MakeBleurt(g.config.bleurt, g.config.retry);
  opts.embeddings = emb.get();
  opts.bleurt = bleurt.get();
  opts.strict = a.strict || g.config.strict;
  opts.threads = g.config.threads;
  opts.timestamp = a.timestamp;

  const EvalReport report = run_eval(items, systems, opts);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  Emit(a.output, render_report(report, OutputFormat(g)));
  return kOk;
}

// --- trainplan ----------------------------------------------------------

struct PlanArgs {
  std::string manifest;
  std::optional<int> last_n;
  bool include_head = false;
  bool include_final_norm = false;
  std::vector<std::string> overrides;
  std::string output;
  std::string before;
  std::string after;
};

FreezePolicy PolicyFrom(const Globals& g, const PlanArgs& a) {
  FreezePolicy p = g.config.freeze;
  if (a.last_n) p.last_n_blocks = *a.last_n;
  if (a.include_head) p.include_head = true;
  if (a.include_final_norm) p.include_final_norm = true;
  return p;
}

int RunPlan(const Globals& g, const PlanArgs& a) {
  const FreezePlan plan = plan_freeze(LayerManifest::Load(a.manifest), PolicyFrom(g, a));
  for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
  auto overrides = g.config.train_overrides;
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value: " + kv);
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  Emit(a.output, SerializeTrainConfig(emit_config(plan, overrides)));
  std::cerr << "trainable " << plan.trainable_param_count << " of "
            << plan.total_param_count << " parameters\n";
  return kOk;
}

int RunVerify(const Globals& g, const PlanArgs& a) {
  const LayerManifest before = LayerManifest::Load(a.before);
  const LayerManifest after = LayerManifest::Load(a.after);
  const FreezePlan plan = plan_freeze(before, PolicyFrom(g, a));
  const FreezeReport r = verify_freeze(before, after, plan);
  std::cout << ToString(r.status) << ": " << r.message << '\n';
  return r.status == FreezeStatus::kFail ? kDataError : kOk;
}

// --- report -------------------------------------------------------------

struct ReportArgs {
  std::string input;
  std::string output;
};

int RunReport(const Globals& g, const ReportArgs& a) {
  Emit(a.output, render_report(parse_structured_report(ReadText(a.input)),
                               OutputFormat(g)));
  return kOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Traffic-safety instruction data and evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for sampling and splitting");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "json"}));

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Guidebook entry files to records");
  c_ingest->add_option("inputs", ingest.inputs, "Guidebook files")->required();
  c_ingest->add_option("-o,--output", ingest.output, "Dataset file (default stdout)");
  c_ingest->add_option("--output-format", ingest.output_format)
      ->check(CLI::IsMember({"lines", "array"}));

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Expand seeds through a chat endpoint");
  c_gen->add_option("--seeds", gen.seeds, "Seed dataset")->required();
  c_gen->add_option("--seeds-format", gen.seeds_format)->check(CLI::IsMember({"lines", "array"}));
  c_gen->add_option("-o,--output", gen.output, "Generated dataset (default stdout)");
  c_gen->add_option("--replay", gen.replay, "Canned responses instead of the network");
  c_gen->add_option("--target", gen.target);
  c_gen->add_option("-k,--seeds-per-prompt", gen.k);
  c_gen->add_option("--max-requests", gen.max_requests);
  c_gen->add_option("--max-in-flight", gen.max_in_flight);
  c_gen->add_option("--dedup-threshold", gen.threshold);
  c_gen->add_option("--temperature", gen.temperature);

  StatsArgs st;
  auto* c_stats = app.add_subcommand("stats", "Count records by source, type and provenance");
  c_stats->add_option("input", st.input)->required();
  c_stats->add_option("--input-format", st.input_format)->check(CLI::IsMember({"lines", "array"}));

  SplitArgs sp;
  auto* c_split = app.add_subcommand("split", "Stratified train/test split");
  c_split->add_option("input", sp.input)->required();
  c_split->add_option("--input-format", sp.input_format)->check(CLI::IsMember({"lines", "array"}));
  c_split->add_option("--fraction", sp.fraction, "Train fraction in (0, 1)");
  c_split->add_option("--train", sp.train)->required();
  c_split->add_option("--test", sp.test)->required();

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Score one candidate against one reference");
  auto* cand = c_score->add_option("--candidate", sc.candidate);
  auto* cand_f = c_score->add_option("--candidate-file", sc.candidate_file)->excludes(cand);
  auto* ref = c_score->add_option("--reference", sc.reference);
  auto* ref_f = c_score->add_option("--reference-file", sc.reference_file)->excludes(ref);
  c_score->callback([&] {
    if (!*cand && !*cand_f) throw CLI::ValidationError("score", "a candidate is required");
    if (!*ref && !*ref_f) throw CLI::ValidationError("score", "a reference is required");
  });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score systems per task type");
  c_eval->add_option("--items", ev.items, "Eval-set file")->required();
  c_eval->add_option("--outputs", ev.outputs, "System outputs file(s)");
  c_eval->add_flag("--collect", ev.collect, "Ask the configured endpoint for answers");
  c_eval->add_option("--system", ev.system, "Column name for collected answers");
  c_eval->add_option("--replay", ev.replay, "Canned responses for --collect");
  c_eval->add_option("--save-outputs", ev.save_outputs, "Write collected answers here");
  c_eval->add_flag("--strict", ev.strict, "Score unanswered items as zero");
  c_eval->add_option("--timestamp", ev.timestamp, "Report timestamp (default now)");
  c_eval->add_option("-o,--output", ev.output, "Report file (default stdout)");

  PlanArgs pl;
  auto* c_plan = app.add_subcommand("trainplan", "Freeze plan and training config");
  c_plan->add_option("--manifest", pl.manifest, "Layer manifest");
  c_plan->add_option("--last-n", pl.last_n, "Trainable trailing blocks");
  c_plan->add_flag("--include-head", pl.include_head);
  c_plan->add_flag("--include-final-norm", pl.include_final_norm);
  c_plan->add_option("--set", pl.overrides, "Config override key=value");
  c_plan->add_option("-o,--output", pl.output, "Config file (default stdout)");
  auto* c_verify = c_plan->add_subcommand("verify", "Check frozen layers were untouched");
  c_plan->fallthrough();
  c_verify->add_option("--before", pl.before)->required();
  c_verify->add_option("--after", pl.after)->required();
  c_verify->add_option("--last-n", pl.last_n);
  c_verify->add_flag("--include-head", pl.include_head);
  c_verify->add_flag("--include-final-norm", pl.include_final_norm);
  c_plan->callback([&] {
    if (!*c_verify && pl.manifest.empty()) {
      throw CLI::ValidationError("trainplan", "--manifest is required");
    }
  });

  ReportArgs rp;
  auto* c_report = app.add_subcommand("report", "Re-render a json report");
  c_report->add_option("input", rp.input)->required();
  c_report->add_option("-o,--output", rp.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    g.seed_set = seed_opt->count() > 0;
    if (!g.config_path.empty()) g.config = LoadConfig(g.config_path);
    if (*c_ingest) return RunIngest(g, ingest);
    if (*c_gen) return RunGenerate(g, gen);
    if (*c_stats) return RunStats(g, st);
    if (*c_split) return RunSplit(g, sp);
    if (*c_score) return RunScore(g, sc);
    if (*c_eval) return RunEval(g, ev);
    if (*c_verify) return RunVerify(g, pl);
    if (*c_plan) return RunPlan(g, pl);
    if (*c_report) return RunReport(g, rp);
  } catch (const EndpointError& e) {
    std::cerr << "endpoint error: " << e.what() << '\n';
    return kEndpointError;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace
}  // namespace safetune::cli

int main(int argc, char** argv) { return safetune::cli::Main(argc, argv); }
