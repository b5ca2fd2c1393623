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

#include "safetune/train_plan.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "safetune/error.h"

namespace safetune {
namespace {

constexpr std::array<std::string_view, 4> kKindLabels = {"embedding", "block",
                                                         "norm", "head"};

bool IsHexDigest(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

template <typename T>
T ParseNumber(const std::string& field, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("override " + field + ": cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

std::string_view ToString(LayerKind kind) {
  return kKindLabels[static_cast<std::size_t>(kind)];
}

std::optional<LayerKind> ParseLayerKind(std::string_view label) {
  for (std::size_t i = 0; i < kKindLabels.size(); ++i) {
    if (kKindLabels[i] == label) return static_cast<LayerKind>(i);
  }
  return std::nullopt;
}

LayerManifest::LayerManifest(std::vector<LayerEntry> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> names;
  for (auto& e : entries_) {
    if (e.name.empty()) throw InvalidArgument("layer with empty name");
    if (!names.insert(e.name).second) {
      throw InvalidArgument("duplicate layer name: " + e.name);
    }
    std::transform(e.checksum.begin(), e.checksum.end(), e.checksum.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (!IsHexDigest(e.checksum)) {
      throw InvalidArgument("layer " + e.name +
                            ": checksum must be 64 hex characters");
    }
  }
}

LayerManifest LayerManifest::Parse(std::string_view text) {
  std::vector<LayerEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string name, kind, count, checksum, extra;
    if (!(fields >> name >> kind >> count >> checksum) || (fields >> extra)) {
      throw ParseError("manifest line " + std::to_string(lineno) +
                           ": expected '<name> <kind> <param_count> <checksum>'",
                       lineno);
    }
    LayerEntry e;
    e.name = name;
    const auto k = ParseLayerKind(kind);
    if (!k) {
      throw ParseError("manifest line " + std::to_string(lineno) +
                           ": unknown layer kind '" + kind + "'",
                       lineno);
    }
    e.kind = *k;
    auto [ptr, ec] =
        std::from_chars(count.data(), count.data() + count.size(), e.param_count);
    if (ec != std::errc() || ptr != count.data() + count.size()) {
      throw ParseError("manifest line " + std::to_string(lineno) +
                           ": bad param_count '" + count + "'",
                       lineno);
    }
    e.checksum = checksum;
    entries.push_back(std::move(e));
  }
  try {
    return LayerManifest(std::move(entries));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

LayerManifest LayerManifest::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

std::string LayerManifest::Serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.name + " " + std::string(ToString(e.kind)) + " " +
           std::to_string(e.param_count) + " " + e.checksum + "\n";
  }
  return out;
}

FreezePlan plan_freeze(const LayerManifest& manifest,
                       const FreezePolicy& policy) {
  if (manifest.empty()) throw InvalidArgument("plan_freeze: empty manifest");
  if (policy.last_n_blocks < 1) {
    throw InvalidArgument("plan_freeze: last_n_blocks must be >= 1");
  }
  const auto& entries = manifest.entries();
  std::vector<std::size_t> blocks;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].kind == LayerKind::kBlock) blocks.push_back(i);
  }
  if (blocks.empty()) throw DataError("manifest has no block layers");

  FreezePlan plan;
  std::vector<bool> trainable(entries.size(), false);
  const auto n = static_cast<std::size_t>(policy.last_n_blocks);
  if (blocks.size() < n) {
    plan.warnings.push_back("policy asks for the last " + std::to_string(n) +
                            " blocks but the manifest has only " +
                            std::to_string(blocks.size()));
  }
  const std::size_t first = blocks.size() > n ? blocks.size() - n : 0;
  for (std::size_t b = first; b < blocks.size(); ++b) trainable[blocks[b]] = true;

  if (policy.include_head) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].kind == LayerKind::kHead) trainable[i] = true;
    }
  }
  if (policy.include_final_norm) {
    bool found = false;
    for (std::size_t i = entries.size(); i-- > blocks.back();) {
      if (entries[i].kind == LayerKind::kNorm) {
        trainable[i] = true;
        found = true;
        break;
      }
    }
    if (!found) plan.warnings.push_back("no final norm layer after the last block");
  }

  for (std::size_t i = 0; i < entries.size(); ++i) {
    plan.total_param_count += entries[i].param_count;
    if (trainable[i]) {
      plan.trainable.push_back(entries[i].name);
      plan.trainable_param_count += entries[i].param_count;
    } else {
      plan.frozen.push_back(entries[i].name);
    }
  }
  return plan;
}

const std::vector<std::string>& TrainConfigFieldNames() {
  static const std::vector<std::string> kNames = {
      "batch_size",          "learning_rate", "epochs",
      "max_sequence_length", "warmup_ratio",  "weight_decay"};
  return kNames;
}

TrainConfig emit_config(const FreezePlan& plan,
                        const std::map<std::string, std::string>& overrides) {
  TrainConfig c;
  for (const auto& [field, value] : overrides) {
    if (field == "batch_size") {
      c.batch_size = ParseNumber<int>(field, value);
    } else if (field == "learning_rate") {
      c.learning_rate = ParseNumber<double>(field, value);
    } else if (field == "epochs") {
      c.epochs = ParseNumber<int>(field, value);
    } else if (field == "max_sequence_length") {
      c.max_sequence_length = ParseNumber<int>(field, value);
    } else if (field == "warmup_ratio") {
      c.warmup_ratio = ParseNumber<double>(field, value);
    } else if (field == "weight_decay") {
      c.weight_decay = ParseNumber<double>(field, value);
    } else {
      throw InvalidArgument("unknown train config field: " + field);
    }
  }
  if (c.batch_size <= 0 || c.epochs <= 0 || c.max_sequence_length <= 0 ||
      !(c.learning_rate > 0) || !(c.warmup_ratio > 0) ||
      !(c.weight_decay >= 0)) {
    throw InvalidArgument(
        "train config: numeric fields must be positive (weight_decay >= 0)");
  }
  c.trainable_layers = plan.trainable;
  c.frozen_layers = plan.frozen;
  return c;
}

std::string SerializeTrainConfig(const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["batch_size"] = config.batch_size;
  j["learning_rate"] = config.learning_rate;
  j["epochs"] = config.epochs;
  j["max_sequence_length"] = config.max_sequence_length;
  j["warmup_ratio"] = config.warmup_ratio;
  j["weight_decay"] = config.weight_decay;
  j["trainable_layers"] = config.trainable_layers;
  j["frozen_layers"] = config.frozen_layers;
  return j.dump(2) + "\n";
}

std::string_view ToString(FreezeStatus status) {
  switch (status) {
    case FreezeStatus::kPass: return "PASS";
    case FreezeStatus::kWarn: return "WARN";
    case FreezeStatus::kFail: return "FAIL";
  }
  return "?";
}

FreezeReport verify_freeze(const LayerManifest& before,
                           const LayerManifest& after, const FreezePlan& plan) {
  const auto& b = before.entries();
  const auto& a = after.entries();
  if (b.size() != a.size()) {
    throw InvalidArgument("verify_freeze: manifests differ in layer count");
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].name != a[i].name) {
      throw InvalidArgument("verify_freeze: layer " + std::to_string(i) +
                            " is '" + b[i].name + "' before and '" + a[i].name +
                            "' after");
    }
  }
  const std::set<std::string> frozen(plan.frozen.begin(), plan.frozen.end());
  const std::set<std::string> trainable(plan.trainable.begin(),
                                        plan.trainable.end());
  FreezeReport report;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].checksum == a[i].checksum) continue;
    if (trainable.count(b[i].name)) {
      report.changed_trainable.push_back(b[i].name);
    } else if (frozen.count(b[i].name)) {
      report.changed_frozen.push_back(b[i].name);
    } else {
      throw InvalidArgument("verify_freeze: layer " + b[i].name +
                            " is not covered by the plan");
    }
  }
  if (!report.changed_frozen.empty()) {
    report.status = FreezeStatus::kFail;
    report.message = "frozen layer(s) changed:";
    for (const auto& n : report.changed_frozen) report.message += " " + n;
  } else if (report.changed_trainable.empty()) {
    report.status = FreezeStatus::kWarn;
    report.message = "no trainable layer changed; training had no effect";
  } else {
    report.status = FreezeStatus::kPass;
    report.message = std::to_string(report.changed_trainable.size()) +
                     " trainable layer(s) changed, all frozen layers intact";
  }
  return report;
}

}  // namespace safetune
