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
#include <numeric>
#include <random>
#include <set>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "safetune/error.h"

namespace safetune {
namespace {

using test_support::ModelManifest;

using Names = std::vector<std::string>;

TEST(PlanFreeze, LastTwoOfThirtyTwoBlocks) {
  const FreezePlan p = plan_freeze(ModelManifest(32), {});
  EXPECT_EQ(p.trainable, (Names{"B30", "B31"}));
  EXPECT_EQ(p.frozen.size(), 32u);
  EXPECT_EQ(p.frozen.front(), "embed_tokens");
  EXPECT_EQ(p.frozen.back(), "lm_head");
  EXPECT_TRUE(p.warnings.empty());
  EXPECT_EQ(p.trainable_param_count, 2u * 202383360u);
}

TEST(PlanFreeze, ExactlyTwoBlocks) {
  const FreezePlan p = plan_freeze(ModelManifest(2), {});
  EXPECT_EQ(p.trainable, (Names{"B0", "B1"}));
  EXPECT_TRUE(p.warnings.empty());
}

TEST(PlanFreeze, OneBlockWarnsShortfall) {
  const FreezePlan p = plan_freeze(ModelManifest(1), {});
  EXPECT_EQ(p.trainable, (Names{"B0"}));
  EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(PlanFreeze, NoBlocksIsInvalidManifest) {
  EXPECT_THROW(plan_freeze(ModelManifest(0), {}), DataError);
  EXPECT_THROW(plan_freeze(LayerManifest(), {}), InvalidArgument);
  FreezePolicy zero;
  zero.last_n_blocks = 0;
  EXPECT_THROW(plan_freeze(ModelManifest(4), zero), InvalidArgument);
}

TEST(PlanFreeze, HeadAndFinalNormFlags) {
  FreezePolicy pol;
  pol.include_head = true;
  pol.include_final_norm = true;
  const FreezePlan p = plan_freeze(ModelManifest(4, true), pol);
  EXPECT_EQ(p.trainable, (Names{"B2", "B3", "norm", "lm_head"}));
  EXPECT_EQ(p.frozen, (Names{"embed_tokens", "B0", "B1"}));
}

TEST(PlanFreeze, PartitionAndParamCountProperties) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int blocks = 1 + static_cast<int>(rng() % 40);
    const LayerManifest m = ModelManifest(blocks, rng() % 2, std::to_string(trial));
    FreezePolicy pol;
    pol.last_n_blocks = 1 + static_cast<int>(rng() % 6);
    pol.include_head = rng() % 2;
    pol.include_final_norm = rng() % 2;
    const FreezePlan p = plan_freeze(m, pol);
    std::set<std::string> t(p.trainable.begin(), p.trainable.end());
    std::set<std::string> f(p.frozen.begin(), p.frozen.end());
    ASSERT_EQ(t.size() + f.size(), m.size());
    std::uint64_t trainable = 0, total = 0;
    for (const auto& e : m.entries()) {
      ASSERT_NE(t.count(e.name), f.count(e.name));
      total += e.param_count;
      if (t.count(e.name)) trainable += e.param_count;
    }
    ASSERT_EQ(p.trainable_param_count, trainable);
    ASSERT_EQ(p.total_param_count, total);
  }
}

TEST(EmitConfig, DefaultsFieldForField) {
  const FreezePlan p = plan_freeze(ModelManifest(32), {});
  const TrainConfig c = emit_config(p);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.learning_rate, 2e-5);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.max_sequence_length, 152);
  EXPECT_EQ(c.warmup_ratio, 0.03);
  EXPECT_EQ(c.weight_decay, 0.0);
  EXPECT_EQ(c.trainable_layers, p.trainable);
  EXPECT_EQ(c.frozen_layers, p.frozen);
}

TEST(EmitConfig, SerializedKeyOrderIsStable) {
  const FreezePlan p = plan_freeze(ModelManifest(2), {});
  const std::string doc = SerializeTrainConfig(emit_config(p));
  EXPECT_EQ(doc,
            "{\n"
            "  \"batch_size\": 16,\n"
            "  \"learning_rate\": 2e-05,\n"
            "  \"epochs\": 3,\n"
            "  \"max_sequence_length\": 152,\n"
            "  \"warmup_ratio\": 0.03,\n"
            "  \"weight_decay\": 0.0,\n"
            "  \"trainable_layers\": [\n"
            "    \"B0\",\n"
            "    \"B1\"\n"
            "  ],\n"
            "  \"frozen_layers\": [\n"
            "    \"embed_tokens\",\n"
            "    \"lm_head\"\n"
            "  ]\n"
            "}\n");
  EXPECT_EQ(SerializeTrainConfig(emit_config(p)), doc);
}

TEST(EmitConfig, OverrideEpochs) {
  const TrainConfig c = emit_config(plan_freeze(ModelManifest(2), {}), {{"epochs", "1"}});
  EXPECT_EQ(c.epochs, 1);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.learning_rate, 2e-5);
  EXPECT_EQ(c.max_sequence_length, 152);
  EXPECT_EQ(c.warmup_ratio, 0.03);
  EXPECT_EQ(c.weight_decay, 0.0);
}

TEST(EmitConfig, OverrideErrors) {
  const FreezePlan p = plan_freeze(ModelManifest(2), {});
  EXPECT_THROW(emit_config(p, {{"nonsense_field", "5"}}), InvalidArgument);
  EXPECT_THROW(emit_config(p, {{"epochs", "three"}}), InvalidArgument);
  EXPECT_THROW(emit_config(p, {{"epochs", "0"}}), InvalidArgument);
  EXPECT_THROW(emit_config(p, {{"learning_rate", "-1e-5"}}), InvalidArgument);
  EXPECT_THROW(emit_config(p, {{"batch_size", "2.5"}}), InvalidArgument);
  EXPECT_NO_THROW(emit_config(p, {{"weight_decay", "0"}}));
  EXPECT_EQ(emit_config(p, {{"learning_rate", "1e-4"}}).learning_rate, 1e-4);
  EXPECT_EQ(TrainConfigFieldNames().size(), 6u);
}

LayerManifest WithChecksum(const LayerManifest& m, const std::string& name,
                           const std::string& checksum) {
  auto e = m.entries();
  for (auto& x : e) {
    if (x.name == name) x.checksum = checksum;
  }
  return LayerManifest(e);
}

TEST(VerifyFreeze, PassWarnFail) {
  const LayerManifest before = ModelManifest(4);
  const FreezePlan p = plan_freeze(before, {});
  const std::string other = Sha256Hex("changed");

  const FreezeReport pass = verify_freeze(before, WithChecksum(before, "B3", other), p);
  EXPECT_EQ(pass.status, FreezeStatus::kPass);
  EXPECT_EQ(pass.changed_trainable, (Names{"B3"}));

  const FreezeReport fail = verify_freeze(before, WithChecksum(before, "B1", other), p);
  EXPECT_EQ(fail.status, FreezeStatus::kFail);
  EXPECT_EQ(fail.changed_frozen, (Names{"B1"}));
  EXPECT_NE(fail.message.find("B1"), std::string::npos);

  EXPECT_EQ(verify_freeze(before, before, p).status, FreezeStatus::kWarn);
}

TEST(VerifyFreeze, MismatchedNames) {
  const LayerManifest a = ModelManifest(4);
  const FreezePlan p = plan_freeze(a, {});
  EXPECT_THROW(verify_freeze(a, ModelManifest(5), p), InvalidArgument);
  auto e = a.entries();
  std::swap(e[1], e[2]);
  EXPECT_THROW(verify_freeze(a, LayerManifest(e), p), InvalidArgument);
}

TEST(VerifyFreeze, SelfComparisonNeverFails) {
  for (int blocks = 1; blocks < 12; ++blocks) {
    const LayerManifest m = ModelManifest(blocks, blocks % 2);
    EXPECT_NE(verify_freeze(m, m, plan_freeze(m, {})).status, FreezeStatus::kFail);
  }
}

TEST(Manifest, ParseSerializeRoundTrip) {
  const LayerManifest m = ModelManifest(3, true);
  const std::string text = m.Serialize();
  EXPECT_EQ(LayerManifest::Parse(text).entries(), m.entries());
  EXPECT_EQ(LayerManifest::Parse("# comment\n\n" + text).Serialize(), text);
}

TEST(Manifest, Errors) {
  const std::string sum(64, 'a');
  try {
    LayerManifest::Parse("a block 1 " + sum + "\nb widget 1 " + sum + "\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
  EXPECT_THROW(LayerManifest::Parse("a block x " + sum + "\n"), ParseError);
  EXPECT_THROW(LayerManifest::Parse("a block 1 abc\n"), ParseError);
  EXPECT_THROW(LayerManifest::Parse("a block 1 " + sum + "\na norm 2 " + sum + "\n"),
               ParseError);
  EXPECT_EQ(LayerManifest::Parse("a block 1 " + std::string(64, 'F') + "\n")
                .entries()[0]
                .checksum,
            std::string(64, 'f'));
}

}  // namespace
}  // namespace safetune
