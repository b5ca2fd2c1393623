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

#include "safetune/generator.h"

#include <algorithm>
#include <cctype>
#include <future>
#include <optional>
#include <random>

#include "safetune/metrics.h"
#include "safetune/text_norm.h"

namespace safetune {
namespace {

constexpr std::size_t kExcerptBytes = 160;

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

enum class Field { kNone, kType, kInstruction, kInput, kOutput };

// Recognizes "Label: value", tolerating list markers ("1.", "-", "###")
// and markdown bold around the label.
Field MatchLabel(std::string_view line, std::string_view& value) {
  std::string_view s = Trim(line);
  while (!s.empty() && (s.front() == '#' || s.front() == '-' ||
                        s.front() == '*' || std::isdigit(static_cast<unsigned char>(s.front())) ||
                        s.front() == '.' || s.front() == ')' || s.front() == ' ')) {
    s.remove_prefix(1);
  }
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon > 16) return Field::kNone;
  std::string label = Lower(Trim(s.substr(0, colon)));
  label.erase(std::remove(label.begin(), label.end(), '*'), label.end());
  Field f = Field::kNone;
  if (label == "instruction") f = Field::kInstruction;
  else if (label == "input") f = Field::kInput;
  else if (label == "output") f = Field::kOutput;
  else if (label == "type") f = Field::kType;
  if (f == Field::kNone) return f;
  std::string_view rest = s.substr(colon + 1);
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  value = Trim(rest);
  return f;
}

struct PendingBlock {
  std::optional<std::string> type, instruction, input, output;
  std::string raw;

  bool empty() const { return !type && !instruction && !input && !output; }
  std::optional<std::string>& slot(Field f) {
    switch (f) {
      case Field::kType: return type;
      case Field::kInstruction: return instruction;
      case Field::kInput: return input;
      default: return output;
    }
  }
};

std::string TrimTrailing(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' ||
                        s.back() == '\t' || s.back() == '\r')) {
    s.pop_back();
  }
  return s;
}

std::vector<std::size_t> SampleSeeds(std::size_t n, std::size_t k,
                                     std::uint64_t seed, std::size_t request) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(request),
                    static_cast<std::uint32_t>(request >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng() % (n - i)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

void GenerationConfig::Validate() const {
  if (seeds_per_prompt < 1) throw InvalidArgument("seeds_per_prompt must be >= 1");
  if (target_count < 1) throw InvalidArgument("target_count must be >= 1");
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 100.0)) {
    throw InvalidArgument("dedup_threshold must lie in (0, 100]");
  }
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
}

InstructionRecord CandidateRecord::ToRecord() const {
  InstructionRecord r;
  r.instruction = instruction;
  r.input = input;
  r.output = output;
  r.task_type = task_type;
  r.source = source;
  r.provenance = provenance;
  r.id = ContentId(r);
  return r;
}

std::string RenderBlock(const InstructionRecord& record) {
  return "Instruction: " + record.instruction + "\nInput: " + record.input +
         "\nOutput: " + record.output + "\n";
}

std::string build_prompt(const std::vector<InstructionRecord>& seeds,
                         std::size_t k, std::string_view directive) {
  if (k < 1) throw InvalidArgument("build_prompt: k must be >= 1");
  if (k > seeds.size()) {
    throw InvalidArgument("build_prompt: k exceeds the number of seeds");
  }
  std::string prompt =
      "Here are examples of transportation safety instructions with "
      "answers:\n\n";
  for (std::size_t i = 0; i < k; ++i) {
    prompt += RenderBlock(seeds[i]);
    prompt += '\n';
  }
  prompt += directive;
  prompt += '\n';
  return prompt;
}

TaskType InferTaskType(std::string_view question, TaskType fallback) {
  const std::string q = Lower(question);
  if (q.find("definition") != std::string::npos ||
      q.find("define") != std::string::npos) {
    return TaskType::kDefinition;
  }
  if (q.find("inclusion") != std::string::npos) return TaskType::kInclusions;
  if (q.find("exclusion") != std::string::npos) return TaskType::kExclusions;
  if (q.find("classif") != std::string::npos ||
      q.find("categor") != std::string::npos) {
    return TaskType::kCategories;
  }
  if (q.find("example") != std::string::npos) return TaskType::kExamples;
  if (q.rfind("how do you deal with", 0) == 0) return TaskType::kGuidance;
  return fallback;
}

ParsedGenerations parse_generations(std::string_view raw,
                                    TaskType fallback_task_type) {
  ParsedGenerations out;
  std::vector<PendingBlock> blocks;
  PendingBlock cur;
  Field last = Field::kNone;

  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    const std::string_view line = raw.substr(start, end - start);
    std::string_view value;
    const Field f = MatchLabel(line, value);
    if (f != Field::kNone) {
      // A label already filled in this block, or an Instruction/Type after
      // the question, opens the next block.
      const bool restart =
          cur.slot(f).has_value() ||
          ((f == Field::kInstruction || f == Field::kType) &&
           (cur.input || cur.output));
      if (restart && !cur.empty()) {
        blocks.push_back(std::move(cur));
        cur = PendingBlock{};
      }
      cur.slot(f) = std::string(value);
      last = f;
    } else if (last != Field::kNone && !cur.empty()) {
      std::string& slot = *cur.slot(last);
      if (!slot.empty() || !Trim(line).empty()) {
        if (!slot.empty()) slot += '\n';
        slot += Trim(line);
      }
    }
    if (!cur.empty() && cur.raw.size() < kExcerptBytes) {
      cur.raw.append(line.substr(0, kExcerptBytes - cur.raw.size()));
      cur.raw += '\n';
    }
    if (end == raw.size()) break;
    start = end + 1;
  }
  if (!cur.empty()) blocks.push_back(std::move(cur));

  for (auto& b : blocks) {
    const auto filled = [](const std::optional<std::string>& s) {
      return s && !TrimTrailing(*s).empty();
    };
    if (!filled(b.instruction) || !filled(b.input) || !filled(b.output)) {
      ++out.dropped;
      continue;
    }
    CandidateRecord c;
    c.instruction = TrimTrailing(*b.instruction);
    c.input = TrimTrailing(*b.input);
    c.output = TrimTrailing(*b.output);
    std::optional<TaskType> declared;
    if (b.type) declared = ParseTaskType(Trim(*b.type));
    c.task_type = declared ? *declared : InferTaskType(c.input, fallback_task_type);
    c.raw_excerpt = TrimTrailing(b.raw);
    out.candidates.push_back(std::move(c));
  }
  if (out.candidates.empty()) {
    out.diagnostic = "no complete Instruction/Input/Output block found (" +
                     std::to_string(out.dropped) + " incomplete)";
  }
  return out;
}

DedupResult dedup_filter(const std::vector<CandidateRecord>& candidates,
                         const std::vector<InstructionRecord>& pool,
                         double threshold) {
  std::vector<TokenSequence> seen;
  seen.reserve(pool.size() + candidates.size());
  for (const auto& r : pool) seen.push_back(tokenize(r.input));

  DedupResult out;
  for (const auto& c : candidates) {
    const TokenSequence tokens = tokenize(c.input);
    double best = 0.0;
    for (const auto& s : seen) {
      best = std::max(best, rouge_l(tokens, s).f1);
      if (best >= threshold) break;
    }
    if (best < threshold) {
      out.accepted.push_back(c);
      seen.push_back(tokens);
    } else {
      out.rejected.push_back(c);
    }
  }
  return out;
}

std::vector<InstructionRecord> generate_dataset(
    const std::vector<InstructionRecord>& seeds, const GenerationConfig& config,
    ChatClient& client) {
  config.Validate();
  if (seeds.empty()) throw InvalidArgument("generate_dataset: no seed records");
  const std::size_t k = std::min(config.seeds_per_prompt, seeds.size());

  std::vector<InstructionRecord> pool = seeds;
  std::vector<InstructionRecord> accepted;
  std::size_t next = 0;

  while (accepted.size() < config.target_count && next < config.max_requests) {
    const std::size_t wave =
        std::min(config.max_in_flight, config.max_requests - next);
    std::vector<std::future<ChatResult>> inflight;
    inflight.reserve(wave);
    for (std::size_t i = 0; i < wave; ++i) {
      const std::size_t index = next + i;
      std::vector<InstructionRecord> chosen;
      for (std::size_t s : SampleSeeds(seeds.size(), k, config.seed, index)) {
        chosen.push_back(seeds[s]);
      }
      ChatRequest req;
      req.model = client.config().model;
      req.temperature = config.temperature;
      req.index = index;
      req.messages = {{"system", std::string(kGeneratorSystemPrompt)},
                      {"user", build_prompt(chosen, k, config.directive)}};
      inflight.push_back(std::async(
          wave == 1 ? std::launch::deferred : std::launch::async,
          [&client, req = std::move(req)]() mutable {
            return client.Complete(std::move(req));
          }));
    }

    for (std::size_t i = 0; i < wave; ++i) {
      const std::size_t index = next + i;
      ChatResult result;
      try {
        result = inflight[i].get();
      } catch (const EndpointError& e) {
        for (std::size_t j = i + 1; j < wave; ++j) inflight[j].wait();
        throw GenerationEndpointError(e, accepted);
      }
      if (accepted.size() >= config.target_count) continue;
      const ParsedGenerations parsed =
          parse_generations(result.text, config.fallback_task_type);
      const DedupResult dedup =
          dedup_filter(parsed.candidates, pool, config.dedup_threshold);
      std::size_t taken = 0;
      for (const auto& c : dedup.accepted) {
        if (accepted.size() >= config.target_count) break;
        InstructionRecord r = c.ToRecord();
        pool.push_back(r);
        accepted.push_back(std::move(r));
        ++taken;
      }
      client.Log("request " + std::to_string(index) + ": " +
                 std::to_string(parsed.candidates.size()) + " parsed, " +
                 std::to_string(parsed.dropped) + " incomplete, " +
                 std::to_string(dedup.rejected.size()) + " duplicate, " +
                 std::to_string(taken) + " accepted");
    }
    next += wave;
  }

  if (accepted.size() < config.target_count) {
    const std::string what =
        "request budget of " + std::to_string(config.max_requests) +
        " exhausted with " + std::to_string(accepted.size()) + " of " +
        std::to_string(config.target_count) + " records accepted";
    throw PartialGenerationError(what, std::move(accepted));
  }
  return accepted;
}

}  // namespace safetune
