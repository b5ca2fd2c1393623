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

#include "safetune/corpus_ingest.h"

#include <algorithm>
#include <cctype>
#include <optional>

#include "safetune/error.h"

namespace safetune {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return out;
}

struct Block {
  std::size_t index;
  std::vector<std::string_view> lines;
};

std::vector<Block> SplitBlocks(std::string_view text) {
  std::vector<Block> blocks;
  Block cur{1, {}};
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty()) {
      if (!cur.lines.empty()) {
        blocks.push_back(cur);
        cur = Block{blocks.size() + 1, {}};
      }
    } else {
      cur.lines.push_back(line);
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  if (!cur.lines.empty()) blocks.push_back(cur);
  return blocks;
}

GuidebookEntry ParseBlock(const Block& block) {
  const std::string where = "block " + std::to_string(block.index);
  std::optional<std::string> term, kind, source;
  std::size_t i = 0;
  for (; i < block.lines.size(); ++i) {
    const std::string_view line = block.lines[i];
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) break;
    const std::string key = Upper(Trim(line.substr(0, colon)));
    const std::string value(Trim(line.substr(colon + 1)));
    if (key == "TERM") {
      term = value;
    } else if (key == "KIND") {
      kind = value;
    } else if (key == "SOURCE") {
      source = value;
    } else {
      break;  // first body line may itself contain a colon
    }
    if (term && kind && source) {
      ++i;
      break;
    }
  }
  if (!term) throw ParseError(where + ": missing TERM header", block.index);
  if (!kind) throw ParseError(where + ": missing KIND header", block.index);
  if (!source) throw ParseError(where + ": missing SOURCE header", block.index);

  GuidebookEntry e;
  e.term = *term;
  const auto parsed_kind = ParseTaskType(*kind);
  if (!parsed_kind) {
    throw ParseError(where + ": unknown KIND '" + *kind + "'", block.index);
  }
  e.kind = *parsed_kind;
  const auto parsed_source = ParseSourceTag(*source);
  if (!parsed_source || *parsed_source == SourceTag::kGenerated) {
    throw ParseError(where + ": SOURCE must be MMUCC or HSM, got '" + *source +
                         "'",
                     block.index);
  }
  e.source = *parsed_source;
  for (; i < block.lines.size(); ++i) {
    if (!e.body.empty()) e.body += '\n';
    e.body += Trim(block.lines[i]);
  }
  return e;
}

}  // namespace

std::vector<GuidebookEntry> parse_guidebook(std::string_view text) {
  std::vector<GuidebookEntry> entries;
  for (const auto& block : SplitBlocks(text)) {
    entries.push_back(ParseBlock(block));
  }
  return entries;
}

QuestionTemplates::QuestionTemplates() {
  patterns_[TaskType::kDefinition] =
      "What is the definition of {term} in Motor Vehicle Traffic Crashes?";
  patterns_[TaskType::kInclusions] =
      "What are the inclusions of {term} in Motor Vehicle Traffic Crashes?";
  patterns_[TaskType::kExclusions] =
      "What are the exclusions of {term} in Motor Vehicle Traffic Crashes?";
  patterns_[TaskType::kCategories] =
      "What is the guide to the classification of {term} in Motor Vehicle "
      "Traffic Crashes?";
  patterns_[TaskType::kExamples] =
      "What are the Examples of {term} in Motor Vehicle Traffic Crashes?";
  patterns_[TaskType::kGuidance] = "How do you deal with {term}?";
}

void QuestionTemplates::Set(TaskType kind, std::string pattern) {
  if (pattern.find("{term}") == std::string::npos) {
    throw InvalidArgument("question template lacks {term}: " + pattern);
  }
  patterns_[kind] = std::move(pattern);
}

const std::string& QuestionTemplates::Get(TaskType kind) const {
  return patterns_.at(kind);
}

std::string template_question(std::string_view term, TaskType kind,
                              const QuestionTemplates& templates) {
  if (Trim(term).empty()) throw InvalidArgument("template_question: empty term");
  std::string q = templates.Get(kind);
  static constexpr std::string_view kSlot = "{term}";
  for (auto pos = q.find(kSlot); pos != std::string::npos;
       pos = q.find(kSlot, pos + term.size())) {
    q.replace(pos, kSlot.size(), term);
  }
  return q;
}

PersonaMap DefaultPersonas() {
  return {
      {SourceTag::kMmucc, "You are a police officer at the crash Scene"},
      {SourceTag::kHsm, "You are a traffic engineer work for DOT"},
  };
}

std::vector<InstructionRecord> to_records(
    const std::vector<GuidebookEntry>& entries, const PersonaMap& personas,
    const QuestionTemplates& templates) {
  std::vector<InstructionRecord> records;
  records.reserve(entries.size());
  std::string problems;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const GuidebookEntry& e = entries[i];
    auto persona = personas.find(e.source);
    if (persona == personas.end()) {
      throw ConfigError("no persona configured for source " +
                        std::string(ToString(e.source)));
    }
    InstructionRecord r;
    r.instruction = persona->second;
    r.input = template_question(e.term, e.kind, templates);
    r.output = e.body;
    r.task_type = e.kind;
    r.source = e.source;
    r.provenance = Provenance::kHuman;
    r.id = ContentId(r);
    const ValidationResult v = validate_record(r);
    if (!v.ok()) {
      problems += "\n  entry " + std::to_string(i + 1) + " (" + e.term +
                  "): " + v.Summary();
      continue;
    }
    records.push_back(std::move(r));
  }
  if (!problems.empty()) throw DataError("invalid guidebook entries:" + problems);
  const ValidationResult ids = validate_dataset(records);
  if (!ids.ok()) throw DataError("guidebook produced duplicate records: " + ids.Summary());
  return records;
}

}  // namespace safetune
