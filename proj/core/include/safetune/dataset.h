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

#ifndef SAFETUNE_DATASET_H_
#define SAFETUNE_DATASET_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safetune {

// The six knowledge-question categories.
enum class TaskType {
  kDefinition,
  kInclusions,
  kExclusions,
  kCategories,
  kExamples,
  kGuidance,
};

inline constexpr std::array<TaskType, 6> kAllTaskTypes = {
    TaskType::kDefinition, TaskType::kInclusions, TaskType::kExclusions,
    TaskType::kCategories, TaskType::kExamples,   TaskType::kGuidance,
};

enum class SourceTag { kMmucc, kHsm, kGenerated };

inline constexpr std::array<SourceTag, 3> kAllSourceTags = {
    SourceTag::kMmucc, SourceTag::kHsm, SourceTag::kGenerated};

enum class Provenance { kHuman, kModelGenerated };

inline constexpr std::array<Provenance, 2> kAllProvenances = {
    Provenance::kHuman, Provenance::kModelGenerated};

// Labels: "Definition".."Guidance", "MMUCC"/"HSM"/"GENERATED",
// "HUMAN"/"MODEL_GENERATED". Parsing is exact.
std::string_view ToString(TaskType t);
std::string_view ToString(SourceTag s);
std::string_view ToString(Provenance p);
std::optional<TaskType> ParseTaskType(std::string_view label);
std::optional<SourceTag> ParseSourceTag(std::string_view label);
std::optional<Provenance> ParseProvenance(std::string_view label);

// Plural heading used in reports ("Definitions", ..., "Guidance").
std::string_view SectionTitle(TaskType t);

struct InstructionRecord {
  std::string id;
  std::string instruction;  // persona / system text
  std::string input;        // question
  std::string output;       // answer
  TaskType task_type = TaskType::kDefinition;
  SourceTag source = SourceTag::kMmucc;
  Provenance provenance = Provenance::kHuman;

  bool operator==(const InstructionRecord&) const = default;
};

// A record as read from disk, before labels are parsed.
struct RecordFields {
  std::string id;
  std::string instruction;
  std::string input;
  std::string output;
  std::string task_type;
  std::string source;
  std::string provenance;
};

struct Violation {
  std::string code;  // e.g. "empty-output", "unknown-task-type"
  std::string detail;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool Has(std::string_view code) const;
  std::string Summary() const;
};

ValidationResult validate_record(const InstructionRecord& record);
ValidationResult validate_record(const RecordFields& fields);

// Per-record checks plus id uniqueness.
ValidationResult validate_dataset(const std::vector<InstructionRecord>& records);

// Content-derived id: "rec-" + 16 hex chars of SHA-256 over every field
// except the id.
std::string ContentId(const InstructionRecord& record);

enum class DatasetFormat {
  kRecordLines,       // one JSON object per line, all seven fields
  kInstructionArray,  // JSON array of {instruction, input, output}
};

// Applied to instruction-array elements that lack the labelled fields.
struct RecordDefaults {
  TaskType task_type = TaskType::kGuidance;
  SourceTag source = SourceTag::kHsm;
  Provenance provenance = Provenance::kHuman;
};

// Throws ParseError (1-based line/element index) on malformed input and
// DataError listing every invariant violation.
std::vector<InstructionRecord> parse_dataset(std::string_view text,
                                             DatasetFormat format,
                                             const RecordDefaults& defaults = {});
std::vector<InstructionRecord> load_dataset(const std::string& path,
                                            DatasetFormat format,
                                            const RecordDefaults& defaults = {});

std::string serialize_dataset(const std::vector<InstructionRecord>& records,
                              DatasetFormat format = DatasetFormat::kRecordLines);
void save_dataset(const std::string& path,
                  const std::vector<InstructionRecord>& records,
                  DatasetFormat format = DatasetFormat::kRecordLines);

struct DatasetStats {
  std::size_t total = 0;
  std::map<SourceTag, std::size_t> by_source;
  std::map<TaskType, std::size_t> by_task;
  std::map<Provenance, std::size_t> by_provenance;
};

// Every enum value appears in its breakdown, zero counts included.
DatasetStats stats(const std::vector<InstructionRecord>& records);

struct DatasetSplit {
  std::vector<InstructionRecord> train;
  std::vector<InstructionRecord> test;
};

// Stratified by task type. The overall train size is
// round(fraction * N); each type gets floor or ceil of fraction * count by
// largest remainder. Both halves keep input order. Throws InvalidArgument
// for fraction outside (0, 1) or empty input.
DatasetSplit split(const std::vector<InstructionRecord>& records,
                   double train_fraction, std::uint64_t seed);

}  // namespace safetune

#endif  // SAFETUNE_DATASET_H_
