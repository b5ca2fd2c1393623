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

// Record builders shared by the unit and acceptance tests.
#ifndef SAFETUNE_TESTS_FIXTURES_H_
#define SAFETUNE_TESTS_FIXTURES_H_

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "safetune/dataset.h"
#include "safetune/digest.h"
#include "safetune/train_plan.h"

namespace safetune::test_support {

inline constexpr char kPolicePersona[] = "You are a police officer at the crash Scene";
inline constexpr char kEngineerPersona[] = "You are a traffic engineer work for DOT";

inline InstructionRecord PropertyRecord() {
  InstructionRecord r;
  r.id = "mmucc-property";
  r.instruction = kPolicePersona;
  r.input = "What is the definition of property in Motor Vehicle Traffic Crashes";
  r.output = "Property is any physical object other than a person.";
  r.task_type = TaskType::kDefinition;
  r.source = SourceTag::kMmucc;
  r.provenance = Provenance::kHuman;
  return r;
}

inline InstructionRecord MakeRecord(std::string id, TaskType type,
                                    SourceTag source = SourceTag::kMmucc) {
  InstructionRecord r;
  r.id = std::move(id);
  r.instruction = source == SourceTag::kHsm ? kEngineerPersona : kPolicePersona;
  r.input = "question " + r.id;
  r.output = "answer " + r.id;
  r.task_type = type;
  r.source = source;
  r.provenance = source == SourceTag::kGenerated ? Provenance::kModelGenerated
                                                 : Provenance::kHuman;
  return r;
}

// `mmucc` + `hsm` + `generated` records with task types and text drawn
// from `seed`. Text includes quotes, escapes and non-ASCII characters.
inline std::vector<InstructionRecord> SyntheticDataset(std::size_t mmucc,
                                                       std::size_t hsm,
                                                       std::size_t generated,
                                                       std::uint64_t seed) {
  static const std::vector<std::string> kWords = {
      "van", "trafficway", "crash", "\"quoted\"", "back\\slash",
      "caf\xC3\xA9", "tab\there", "pedestrian", "\xE2\x80\x94", "line\nbreak"};
  std::mt19937_64 rng(seed);
  auto text = [&](int words) {
    std::string s;
    for (int i = 0; i < words; ++i) {
      if (i) s += ' ';
      s += kWords[rng() % kWords.size()];
    }
    return s;
  };
  std::vector<InstructionRecord> out;
  auto add = [&](SourceTag source, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      InstructionRecord r = MakeRecord(
          "syn-" + std::to_string(out.size()),
          kAllTaskTypes[rng() % kAllTaskTypes.size()], source);
      r.input = text(3 + static_cast<int>(rng() % 8));
      r.output = text(5 + static_cast<int>(rng() % 30));
      out.push_back(std::move(r));
    }
  };
  add(SourceTag::kMmucc, mmucc);
  add(SourceTag::kHsm, hsm);
  add(SourceTag::kGenerated, generated);
  return out;
}

// embedding, B0..B{blocks-1}, optional final norm, head.
inline LayerManifest ModelManifest(int blocks, bool final_norm = false,
                                   const std::string& salt = "") {
  std::vector<LayerEntry> e;
  auto add = [&](std::string name, LayerKind kind, std::uint64_t params) {
    const std::string sum = Sha256Hex(name + "/" + salt);
    e.push_back({std::move(name), kind, params, sum});
  };
  add("embed_tokens", LayerKind::kEmbedding, 131072000);
  for (int i = 0; i < blocks; ++i) {
    add("B" + std::to_string(i), LayerKind::kBlock, 202383360);
  }
  if (final_norm) add("norm", LayerKind::kNorm, 4096);
  add("lm_head", LayerKind::kHead, 131072000);
  return LayerManifest(std::move(e));
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace safetune::test_support

#endif  // SAFETUNE_TESTS_FIXTURES_H_
