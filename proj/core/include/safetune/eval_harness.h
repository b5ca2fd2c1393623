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

#ifndef SAFETUNE_EVAL_HARNESS_H_
#define SAFETUNE_EVAL_HARNESS_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safetune/chat_client.h"
#include "safetune/dataset.h"
#include "safetune/metrics.h"

namespace safetune {

struct EvalItem {
  std::string id;
  TaskType task_type = TaskType::kDefinition;
  std::string instruction;
  std::string input;
  std::string reference;

  bool operator==(const EvalItem&) const = default;
};

struct SystemOutput {
  std::string item_id;
  std::string system_name;
  std::string text;

  bool operator==(const SystemOutput&) const = default;
};

// One column of the comparison.
struct SystemOutputs {
  std::string name;
  std::vector<SystemOutput> outputs;
};

// Eval-set file: one JSON object per line with id, task_type, instruction,
// input, reference. Throws ParseError / DataError.
std::vector<EvalItem> parse_eval_items(std::string_view text);
std::vector<EvalItem> load_eval_items(const std::string& path);
std::string serialize_eval_items(const std::vector<EvalItem>& items);

// Outputs file: one JSON object per line with item_id, system_name, text.
// Lines are grouped by system_name in order of first appearance.
std::vector<SystemOutputs> parse_outputs(std::string_view text);
std::vector<SystemOutputs> load_outputs(const std::string& path);
std::string serialize_outputs(const std::vector<SystemOutput>& outputs);

struct MeanScores {
  double bleu = 0.0;
  PrfTriple rouge1;
  PrfTriple rouge2;
  PrfTriple rougeL;
  PrfTriple bert;
  std::optional<double> bleurt;  // mean over items that have a score
  double word_count = 0.0;       // full precision
  std::size_t items = 0;

  // Word count rounded half up, as printed in reports.
  long DisplayWordCount() const;
};

// Field-wise arithmetic mean. Throws InvalidArgument on an empty list.
MeanScores aggregate(const std::vector<ScoreSet>& item_scores);

struct ItemScore {
  std::string item_id;
  TaskType task_type = TaskType::kDefinition;
  ScoreSet scores;
  bool missing = false;  // strict mode placeholder for an unanswered item
};

struct TaskSummary {
  std::optional<MeanScores> mean;  // absent when nothing was scored
  std::size_t scored = 0;
  std::size_t missing = 0;
};

struct SystemReport {
  std::string name;
  std::array<TaskSummary, 6> by_task;  // indexed by TaskType
  std::vector<ItemScore> items;        // eval-set order

  const TaskSummary& For(TaskType t) const {
    return by_task[static_cast<std::size_t>(t)];
  }
};

struct ReportMetadata {
  std::string metric_config;
  std::string dataset_digest;  // SHA-256 of the serialized eval set
  std::string timestamp;       // ISO-8601 UTC
};

struct EvalReport {
  std::vector<SystemReport> systems;  // column order
  ReportMetadata metadata;
  std::vector<std::string> warnings;
};

struct EvalOptions {
  MetricConfig metrics;
  // Defaults to a HashedEmbeddingProvider when null.
  const EmbeddingProvider* embeddings = nullptr;
  std::string embeddings_name = "hashed-64";
  BleurtProvider* bleurt = nullptr;
  // Score unanswered items as 0 instead of leaving them out of the means.
  bool strict = false;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::string timestamp;    // empty = now
};

// Scores every system's answers against the references and aggregates per
// task type. Throws InvalidArgument without items or systems, DataError
// for an output naming an unknown item (or answering one twice), and
// ProviderError when a metric provider fails. Systems with no outputs are
// dropped with a warning.
EvalReport run_eval(const std::vector<EvalItem>& items,
                    const std::vector<SystemOutputs>& systems,
                    const EvalOptions& options);

enum class ReportFormat { kTable, kCsv, kStructured };

// "table", "csv" or "json".
std::optional<ReportFormat> ParseReportFormat(std::string_view name);

// Deterministic rendering. Table layout: a header row, then one section
// per task type (Definitions .. Guidance) with rows BLEU, ROUGE-1,
// ROUGE-2, ROUGE-L, BERT-P, BERT-R, BLEURT, Word Count; ROUGE rows show
// F1; absent values print as an em dash.
std::string render_report(const EvalReport& report, ReportFormat format);

// Reads a structured (JSON) rendering back.
EvalReport parse_structured_report(std::string_view text);

// Collection stopped at a failing item; `outputs` holds the answers for
// the items before it.
class CollectionError : public EndpointError {
 public:
  CollectionError(const EndpointError& cause, std::vector<SystemOutput> outputs)
      : EndpointError(cause.what(), cause.transient(), cause.status()),
        outputs_(std::move(outputs)) {}
  const std::vector<SystemOutput>& outputs() const { return outputs_; }

 private:
  std::vector<SystemOutput> outputs_;
};

// Asks the endpoint each item's question (system = instruction, user =
// input). Outputs follow item order.
std::vector<SystemOutput> collect_outputs(const std::vector<EvalItem>& items,
                                          ChatClient& client,
                                          const std::string& system_name,
                                          std::size_t max_in_flight = 1,
                                          double temperature = 0.0);

}  // namespace safetune

#endif  // SAFETUNE_EVAL_HARNESS_H_
