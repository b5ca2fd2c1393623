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

#ifndef SAFETUNE_GENERATOR_H_
#define SAFETUNE_GENERATOR_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "safetune/chat_client.h"
#include "safetune/dataset.h"
#include "safetune/error.h"

namespace safetune {

inline constexpr std::string_view kDefaultDirective =
    "Write new examples about transportation safety in exactly the same "
    "Instruction/Input/Output layout, separated by blank lines. Every new "
    "Input must ask a question that differs from the examples above.";

inline constexpr std::string_view kGeneratorSystemPrompt =
    "You write instruction-following training data for a transportation "
    "safety assistant.";

struct GenerationConfig {
  std::size_t seeds_per_prompt = 3;  // k
  std::size_t target_count = 100;
  double temperature = 1.0;
  std::size_t max_in_flight = 4;
  double dedup_threshold = 70.0;  // ROUGE-L F1 on the 0-100 scale
  std::size_t max_requests = 1000;  // attempt budget across the whole run
  std::uint64_t seed = 0;           // drives in-context example selection
  std::string directive = std::string(kDefaultDirective);
  // Used when a generated block carries no "Type:" line and the question
  // does not name a category.
  TaskType fallback_task_type = TaskType::kGuidance;

  // Throws InvalidArgument when an invariant (k >= 1, target >= 1,
  // 0 < threshold <= 100, max_in_flight >= 1) does not hold.
  void Validate() const;
};

struct CandidateRecord {
  std::string instruction;
  std::string input;
  std::string output;
  TaskType task_type = TaskType::kGuidance;
  SourceTag source = SourceTag::kGenerated;
  Provenance provenance = Provenance::kModelGenerated;
  std::string raw_excerpt;  // start of the block the candidate came from

  InstructionRecord ToRecord() const;  // id is ContentId of the record
};

// Renders one seed in the block layout:
//   Instruction: <instruction>
//   Input: <input>
//   Output: <output>
std::string RenderBlock(const InstructionRecord& record);

// The first k seeds rendered as blocks, blank-line separated, then the
// directive. Throws InvalidArgument unless 1 <= k <= seeds.size().
std::string build_prompt(const std::vector<InstructionRecord>& seeds,
                         std::size_t k,
                         std::string_view directive = kDefaultDirective);

struct ParsedGenerations {
  std::vector<CandidateRecord> candidates;
  std::size_t dropped = 0;  // incomplete blocks
  std::string diagnostic;   // set when nothing usable was found
};

// Extracts every complete Instruction/Input/Output block. Labels are
// case-insensitive; an optional "Type:" line sets the task type. Text
// before the first label is ignored and lines without a label continue
// the previous field.
ParsedGenerations parse_generations(
    std::string_view raw, TaskType fallback_task_type = TaskType::kGuidance);

// Keyword-based category guess for a question, or `fallback`.
TaskType InferTaskType(std::string_view question, TaskType fallback);

struct DedupResult {
  std::vector<CandidateRecord> accepted;
  std::vector<CandidateRecord> rejected;
};

// Accepts a candidate iff its input's ROUGE-L F1 against every pool input
// and every earlier accepted input is below `threshold`. Candidates are
// processed in order.
DedupResult dedup_filter(const std::vector<CandidateRecord>& candidates,
                         const std::vector<InstructionRecord>& pool,
                         double threshold);

// The attempt budget ran out before target_count records were accepted.
class PartialGenerationError : public DataError {
 public:
  PartialGenerationError(const std::string& what,
                         std::vector<InstructionRecord> accepted)
      : DataError(what), accepted_(std::move(accepted)) {}
  const std::vector<InstructionRecord>& accepted() const { return accepted_; }

 private:
  std::vector<InstructionRecord> accepted_;
};

// The endpoint failed terminally (or exhausted its retries) mid-run.
class GenerationEndpointError : public EndpointError {
 public:
  GenerationEndpointError(const EndpointError& cause,
                          std::vector<InstructionRecord> accepted)
      : EndpointError(cause.what(), cause.transient(), cause.status()),
        accepted_(std::move(accepted)) {}
  const std::vector<InstructionRecord>& accepted() const { return accepted_; }

 private:
  std::vector<InstructionRecord> accepted_;
};

// Self-instruct loop: sample k seeds, prompt, parse, dedup, repeat until
// target_count records are accepted. Up to max_in_flight requests run
// concurrently; responses are consumed in request order so the output
// depends only on the config and the endpoint's answers.
std::vector<InstructionRecord> generate_dataset(
    const std::vector<InstructionRecord>& seeds, const GenerationConfig& config,
    ChatClient& client);

}  // namespace safetune

#endif  // SAFETUNE_GENERATOR_H_
