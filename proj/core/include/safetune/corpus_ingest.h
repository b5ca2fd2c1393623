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

#ifndef SAFETUNE_CORPUS_INGEST_H_
#define SAFETUNE_CORPUS_INGEST_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "safetune/dataset.h"

namespace safetune {

struct GuidebookEntry {
  std::string term;  // subject phrase, e.g. "a van"
  TaskType kind = TaskType::kDefinition;
  std::string body;  // answer prose
  SourceTag source = SourceTag::kMmucc;

  bool operator==(const GuidebookEntry&) const = default;
};

// Parses the entry-block format:
//
//   TERM: a van
//   KIND: Definition
//   SOURCE: MMUCC
//   A van is a motor vehicle ...
//   (more body lines)
//   <blank line>
//
// Header keys are case-insensitive and may come in any order, but all
// three precede the body. Body lines are joined with '\n'. Throws
// ParseError carrying the 1-based block index on a missing header, an
// unknown KIND, or a SOURCE other than MMUCC/HSM.
std::vector<GuidebookEntry> parse_guidebook(std::string_view text);

// Question wording per task type; "{term}" is substituted.
class QuestionTemplates {
 public:
  QuestionTemplates();  // the standard six patterns

  void Set(TaskType kind, std::string pattern);
  const std::string& Get(TaskType kind) const;

 private:
  std::map<TaskType, std::string> patterns_;
};

// Throws InvalidArgument for an empty term.
std::string template_question(std::string_view term, TaskType kind,
                              const QuestionTemplates& templates = {});

// Instruction text per guidebook source.
using PersonaMap = std::map<SourceTag, std::string>;

// MMUCC -> "You are a police officer at the crash Scene",
// HSM -> "You are a traffic engineer work for DOT".
PersonaMap DefaultPersonas();

// One HUMAN record per entry with a content-derived id. Throws ConfigError
// when a source has no persona and DataError when an entry produces an
// invalid record (e.g. empty body).
std::vector<InstructionRecord> to_records(
    const std::vector<GuidebookEntry>& entries, const PersonaMap& personas,
    const QuestionTemplates& templates = {});

}  // namespace safetune

#endif  // SAFETUNE_CORPUS_INGEST_H_
