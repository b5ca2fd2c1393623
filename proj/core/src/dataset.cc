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

#include "safetune/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "safetune/digest.h"
#include "safetune/error.h"

namespace safetune {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kTaskLabels = {
    "Definition", "Inclusions", "Exclusions",
    "Categories", "Examples",   "Guidance"};
constexpr std::array<std::string_view, 6> kSectionTitles = {
    "Definitions", "Inclusions", "Exclusions",
    "Categories",  "Examples",   "Guidance"};
constexpr std::array<std::string_view, 3> kSourceLabels = {"MMUCC", "HSM",
                                                           "GENERATED"};
constexpr std::array<std::string_view, 2> kProvenanceLabels = {
    "HUMAN", "MODEL_GENERATED"};

template <typename Enum, std::size_t N>
std::optional<Enum> ParseLabel(const std::array<std::string_view, N>& labels,
                               std::string_view label) {
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] == label) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

bool Blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

void CheckContent(const std::string& id, const std::string& input,
                  const std::string& output, ValidationResult& r) {
  if (id.empty()) r.violations.push_back({"empty-id", "id is empty"});
  if (Blank(input)) r.violations.push_back({"empty-input", "input is empty"});
  if (Blank(output)) {
    r.violations.push_back({"empty-output", "output is empty"});
  }
}

void CheckPairing(SourceTag source, Provenance provenance,
                  ValidationResult& r) {
  if ((source == SourceTag::kGenerated) !=
      (provenance == Provenance::kModelGenerated)) {
    r.violations.push_back(
        {"source-provenance-mismatch",
         "source GENERATED must pair with provenance MODEL_GENERATED"});
  }
}

ordered_json ToLineJson(const InstructionRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["instruction"] = r.instruction;
  j["input"] = r.input;
  j["output"] = r.output;
  j["task_type"] = ToString(r.task_type);
  j["source"] = ToString(r.source);
  j["provenance"] = ToString(r.provenance);
  return j;
}

std::string RequireString(const json& obj, const char* key,
                          const std::string& where, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(where + ": missing or non-string field '" + key + "'",
                     index);
  }
  return it->get<std::string>();
}

std::string OptionalString(const json& obj, const char* key,
                           std::string_view fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::string(fallback);
  if (!it->is_string()) return std::string(fallback);
  return it->get<std::string>();
}

// 1-based index of the top-level array element that contains byte offset
// `pos` (0 when the offset precedes every element).
std::size_t ElementAt(std::string_view text, std::size_t pos) {
  std::size_t depth = 0;
  std::size_t elements = 0;
  bool in_string = false;
  bool escaped = false;
  bool expect_value = false;
  for (std::size_t i = 0; i < text.size() && i < pos; ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    if (depth == 1 && expect_value && c != ']') {
      ++elements;
      expect_value = false;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '[':
      case '{':
        ++depth;
        if (depth == 1) expect_value = true;
        break;
      case ']':
      case '}':
        if (depth > 0) --depth;
        break;
      case ',':
        if (depth == 1) expect_value = true;
        break;
      default: break;
    }
  }
  return elements;
}

void ThrowIfInvalid(const std::vector<std::pair<std::string, ValidationResult>>& failures) {
  if (failures.empty()) return;
  std::ostringstream msg;
  msg << failures.size() << " invalid record(s):";
  for (const auto& [where, r] : failures) {
    msg << "\n  " << where << ": " << r.Summary();
  }
  throw DataError(msg.str());
}

InstructionRecord FromFields(const RecordFields& f) {
  InstructionRecord r;
  r.id = f.id;
  r.instruction = f.instruction;
  r.input = f.input;
  r.output = f.output;
  r.task_type = *ParseTaskType(f.task_type);
  r.source = *ParseSourceTag(f.source);
  r.provenance = *ParseProvenance(f.provenance);
  return r;
}

}  // namespace

std::string_view ToString(TaskType t) {
  return kTaskLabels[static_cast<std::size_t>(t)];
}
std::string_view ToString(SourceTag s) {
  return kSourceLabels[static_cast<std::size_t>(s)];
}
std::string_view ToString(Provenance p) {
  return kProvenanceLabels[static_cast<std::size_t>(p)];
}
std::optional<TaskType> ParseTaskType(std::string_view label) {
  return ParseLabel<TaskType>(kTaskLabels, label);
}
std::optional<SourceTag> ParseSourceTag(std::string_view label) {
  return ParseLabel<SourceTag>(kSourceLabels, label);
}
std::optional<Provenance> ParseProvenance(std::string_view label) {
  return ParseLabel<Provenance>(kProvenanceLabels, label);
}
std::string_view SectionTitle(TaskType t) {
  return kSectionTitles[static_cast<std::size_t>(t)];
}

bool ValidationResult::Has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

std::string ValidationResult::Summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.code + " (" + v.detail + ")";
  }
  return out;
}

ValidationResult validate_record(const InstructionRecord& record) {
  ValidationResult r;
  CheckContent(record.id, record.input, record.output, r);
  CheckPairing(record.source, record.provenance, r);
  return r;
}

ValidationResult validate_record(const RecordFields& fields) {
  ValidationResult r;
  CheckContent(fields.id, fields.input, fields.output, r);
  const auto task = ParseTaskType(fields.task_type);
  const auto source = ParseSourceTag(fields.source);
  const auto provenance = ParseProvenance(fields.provenance);
  if (!task) {
    r.violations.push_back(
        {"unknown-task-type", "unknown task type '" + fields.task_type + "'"});
  }
  if (!source) {
    r.violations.push_back(
        {"unknown-source", "unknown source '" + fields.source + "'"});
  }
  if (!provenance) {
    r.violations.push_back({"unknown-provenance",
                            "unknown provenance '" + fields.provenance + "'"});
  }
  if (source && provenance) CheckPairing(*source, *provenance, r);
  return r;
}

ValidationResult validate_dataset(
    const std::vector<InstructionRecord>& records) {
  ValidationResult all;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (auto& v : validate_record(records[i]).violations) {
      v.detail = "record " + std::to_string(i + 1) + ": " + v.detail;
      all.violations.push_back(std::move(v));
    }
    if (!seen.insert(records[i].id).second) {
      all.violations.push_back({"duplicate-id", "record " +
                                                    std::to_string(i + 1) +
                                                    ": id '" + records[i].id +
                                                    "' already used"});
    }
  }
  return all;
}

std::string ContentId(const InstructionRecord& record) {
  ordered_json j = ToLineJson(record);
  j.erase("id");
  return "rec-" + Sha256Hex(j.dump()).substr(0, 16);
}

std::vector<InstructionRecord> parse_dataset(std::string_view text,
                                             DatasetFormat format,
                                             const RecordDefaults& defaults) {
  std::vector<RecordFields> fields;
  std::vector<std::string> where;

  if (format == DatasetFormat::kRecordLines) {
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      start = end + 1;
      ++lineno;
      if (Blank(line)) continue;
      const std::string loc = "line " + std::to_string(lineno);
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(loc + ": " + e.what(), lineno);
      }
      if (!j.is_object()) throw ParseError(loc + ": not a JSON object", lineno);
      RecordFields f;
      f.id = RequireString(j, "id", loc, lineno);
      f.instruction = RequireString(j, "instruction", loc, lineno);
      f.input = RequireString(j, "input", loc, lineno);
      f.output = RequireString(j, "output", loc, lineno);
      f.task_type = RequireString(j, "task_type", loc, lineno);
      f.source = RequireString(j, "source", loc, lineno);
      f.provenance = RequireString(j, "provenance", loc, lineno);
      fields.push_back(std::move(f));
      where.push_back(loc);
    }
  } else {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::parse_error& e) {
      const std::size_t element =
          ElementAt(text, e.byte > 0 ? e.byte - 1 : 0);
      throw ParseError("element " + std::to_string(element) + ": " + e.what(),
                       element);
    }
    if (!arr.is_array()) throw ParseError("instruction file is not a JSON array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string loc = "element " + std::to_string(i + 1);
      const json& j = arr[i];
      if (!j.is_object()) throw ParseError(loc + ": not a JSON object", i + 1);
      RecordFields f;
      f.instruction = RequireString(j, "instruction", loc, i + 1);
      f.input = RequireString(j, "input", loc, i + 1);
      f.output = RequireString(j, "output", loc, i + 1);
      f.task_type = OptionalString(j, "task_type", ToString(defaults.task_type));
      f.source = OptionalString(j, "source", ToString(defaults.source));
      f.provenance =
          OptionalString(j, "provenance", ToString(defaults.provenance));
      f.id = OptionalString(j, "id", "");
      fields.push_back(std::move(f));
      where.push_back(loc);
    }
  }

  std::vector<std::pair<std::string, ValidationResult>> failures;
  std::vector<InstructionRecord> records;
  records.reserve(fields.size());
  std::map<std::string, int> generated_ids;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    RecordFields& f = fields[i];
    const bool needs_id = format == DatasetFormat::kInstructionArray && f.id.empty();
    if (needs_id) f.id = "pending";
    ValidationResult r = validate_record(f);
    if (!r.ok()) {
      failures.emplace_back(where[i], std::move(r));
      continue;
    }
    InstructionRecord rec = FromFields(f);
    if (needs_id) {
      rec.id = ContentId(rec);
      // Identical bare triples still need distinct ids.
      const int dup = ++generated_ids[rec.id];
      if (dup > 1) rec.id += "-" + std::to_string(dup);
    }
    records.push_back(std::move(rec));
  }
  ThrowIfInvalid(failures);

  ValidationResult ids = validate_dataset(records);
  if (!ids.ok()) throw DataError("invalid dataset: " + ids.Summary());
  return records;
}

std::vector<InstructionRecord> load_dataset(const std::string& path,
                                            DatasetFormat format,
                                            const RecordDefaults& defaults) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format, defaults);
}

std::string serialize_dataset(const std::vector<InstructionRecord>& records,
                              DatasetFormat format) {
  try {
    if (format == DatasetFormat::kRecordLines) {
      std::string out;
      for (const auto& r : records) {
        out += ToLineJson(r).dump();
        out += '\n';
      }
      return out;
    }
    ordered_json arr = ordered_json::array();
    for (const auto& r : records) {
      ordered_json j;
      j["instruction"] = r.instruction;
      j["input"] = r.input;
      j["output"] = r.output;
      arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
  } catch (const json::type_error& e) {
    throw DataError(std::string("record text is not valid UTF-8: ") + e.what());
  }
}

void save_dataset(const std::string& path,
                  const std::vector<InstructionRecord>& records,
                  DatasetFormat format) {
  const std::string data = serialize_dataset(records, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dataset file: " + path);
  out << data;
  if (!out) throw DataError("write failed: " + path);
}

DatasetStats stats(const std::vector<InstructionRecord>& records) {
  DatasetStats s;
  for (auto t : kAllSourceTags) s.by_source[t] = 0;
  for (auto t : kAllTaskTypes) s.by_task[t] = 0;
  for (auto p : kAllProvenances) s.by_provenance[p] = 0;
  for (const auto& r : records) {
    ++s.by_source[r.source];
    ++s.by_task[r.task_type];
    ++s.by_provenance[r.provenance];
  }
  s.total = records.size();
  return s;
}

DatasetSplit split(const std::vector<InstructionRecord>& records,
                   double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train fraction must lie in (0, 1)");
  }
  if (records.empty()) throw InvalidArgument("split: dataset is empty");

  std::map<TaskType, std::vector<std::size_t>> by_type;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_type[records[i].task_type].push_back(i);
  }

  // Largest-remainder apportionment of round(f * N) over the types.
  struct Quota {
    TaskType type;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [type, idx] : by_type) {
    const double exact = train_fraction * static_cast<double>(idx.size());
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({type, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  const auto target = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(records.size())));
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t k = 0; assigned < target && k < order.size(); ++k, ++assigned) {
    ++quotas[order[k]].take;
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> in_train(records.size(), false);
  for (const auto& q : quotas) {
    std::vector<std::size_t> idx = by_type[q.type];
    // Fisher-Yates on raw engine output; std::shuffle is not portable.
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng() % i]);
    }
    for (std::size_t k = 0; k < q.take && k < idx.size(); ++k) {
      in_train[idx[k]] = true;
    }
  }

  DatasetSplit out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (in_train[i] ? out.train : out.test).push_back(records[i]);
  }
  return out;
}

}  // namespace safetune
