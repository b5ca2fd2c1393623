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

#ifndef SAFETUNE_TRAIN_PLAN_H_
#define SAFETUNE_TRAIN_PLAN_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safetune {

enum class LayerKind { kEmbedding, kBlock, kNorm, kHead };

std::string_view ToString(LayerKind kind);
std::optional<LayerKind> ParseLayerKind(std::string_view label);

struct LayerEntry {
  std::string name;
  LayerKind kind = LayerKind::kBlock;
  std::uint64_t param_count = 0;
  std::string checksum;  // 64 lowercase hex chars (SHA-256)

  bool operator==(const LayerEntry&) const = default;
};

// Ordered by depth, embedding first and head last. Names are unique.
class LayerManifest {
 public:
  LayerManifest() = default;
  // Throws InvalidArgument on duplicate names or malformed checksums.
  explicit LayerManifest(std::vector<LayerEntry> entries);

  // One entry per line: "<name> <kind> <param_count> <hex checksum>".
  // Blank lines and lines starting with '#' are skipped. Throws ParseError
  // with the 1-based line number.
  static LayerManifest Parse(std::string_view text);
  static LayerManifest Load(const std::string& path);
  std::string Serialize() const;

  const std::vector<LayerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<LayerEntry> entries_;
};

struct FreezePolicy {
  int last_n_blocks = 2;
  bool include_head = false;
  bool include_final_norm = false;
};

struct FreezePlan {
  std::vector<std::string> trainable;  // manifest order
  std::vector<std::string> frozen;     // manifest order
  std::uint64_t trainable_param_count = 0;
  std::uint64_t total_param_count = 0;
  std::vector<std::string> warnings;
};

// Trainable = the last n block entries, plus head entries and the final
// norm (the last norm after the final block) when flagged. Fewer than n
// blocks makes every block trainable and adds a shortfall warning. Throws
// InvalidArgument for an empty manifest or n < 1 and DataError when the
// manifest has no block entries.
FreezePlan plan_freeze(const LayerManifest& manifest, const FreezePolicy& policy);

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 2e-5;
  int epochs = 3;
  int max_sequence_length = 152;
  double warmup_ratio = 0.03;
  double weight_decay = 0.0;
  std::vector<std::string> trainable_layers;
  std::vector<std::string> frozen_layers;
};

// Names accepted by emit_config overrides.
const std::vector<std::string>& TrainConfigFieldNames();

// Defaults plus the plan's layer lists. Overrides are given as text
// ("epochs" -> "1") and replace the named numeric fields. Throws
// InvalidArgument on an unknown field, an unparsable value, or a value
// that breaks positivity (weight_decay may be 0).
TrainConfig emit_config(const FreezePlan& plan,
                        const std::map<std::string, std::string>& overrides = {});

// Stable key order: the six numeric fields, then trainable_layers and
// frozen_layers. Pretty-printed JSON ending in '\n'.
std::string SerializeTrainConfig(const TrainConfig& config);

enum class FreezeStatus { kPass, kWarn, kFail };

std::string_view ToString(FreezeStatus status);

struct FreezeReport {
  FreezeStatus status = FreezeStatus::kPass;
  std::vector<std::string> changed_frozen;     // FAIL reasons
  std::vector<std::string> changed_trainable;
  std::string message;
};

// FAIL names every frozen layer whose checksum changed; WARN when nothing
// trainable changed either; PASS otherwise. Throws InvalidArgument when the
// two manifests disagree on names or order.
FreezeReport verify_freeze(const LayerManifest& before,
                           const LayerManifest& after, const FreezePlan& plan);

}  // namespace safetune

#endif  // SAFETUNE_TRAIN_PLAN_H_
