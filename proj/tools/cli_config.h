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

// JSON run configuration for the safetune command-line tool.
#ifndef SAFETUNE_TOOLS_CLI_CONFIG_H_
#define SAFETUNE_TOOLS_CLI_CONFIG_H_

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "safetune/chat_client.h"
#include "safetune/corpus_ingest.h"
#include "safetune/generator.h"
#include "safetune/metrics.h"
#include "safetune/providers.h"
#include "safetune/retry.h"
#include "safetune/train_plan.h"

namespace safetune::cli {

struct ProviderSpec {
  std::string kind;  // "hashed", "fixture", "http"; empty = not configured
  std::string path;  // fixture file
  HttpEndpoint http;
  std::size_t dimension = 64;
  std::uint64_t seed = 0x5afe7u;

  static ProviderSpec Hashed() {
    ProviderSpec p;
    p.kind = "hashed";
    return p;
  }
};

struct Config {
  ChatEndpointConfig endpoint;
  std::string replay;  // canned-response file; replaces the network
  RetryPolicy retry;
  GenerationConfig generation;
  PersonaMap personas = DefaultPersonas();
  QuestionTemplates templates;
  MetricConfig metrics;
  bool idf = false;
  ProviderSpec embeddings = ProviderSpec::Hashed();
  ProviderSpec bleurt;
  FreezePolicy freeze;
  std::map<std::string, std::string> train_overrides;
  std::size_t threads = 0;
  bool strict = false;
};

// Reads a config file. Unknown keys and wrongly typed values throw
// ConfigError naming the offending key.
Config LoadConfig(const std::string& path);

std::unique_ptr<EmbeddingProvider> MakeEmbeddings(const ProviderSpec& spec,
                                                  const RetryPolicy& retry,
                                                  std::string* name);
std::unique_ptr<BleurtProvider> MakeBleurt(const ProviderSpec& spec,
                                           const RetryPolicy& retry);

// HTTP transport, or the replay transport when `replay` is set.
std::shared_ptr<ChatTransport> MakeTransport(const Config& config,
                                             const std::string& replay);

}  // namespace safetune::cli

#endif  // SAFETUNE_TOOLS_CLI_CONFIG_H_
