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

#include "cli_config.h"

#include <fstream>
#include <set>

#include "nlohmann/json.hpp"
#include "safetune/error.h"

namespace safetune::cli {
namespace {

using nlohmann::json;

// Typed access to one JSON object that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  // Throws on any key that no Get/Child call asked for.
  void Finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key: " + Key(k));
    }
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("wrong type for config key " + Key(key));
    }
  }

  void GetMillis(const char* key, std::chrono::milliseconds& out) {
    long long ms = out.count();
    Get(key, ms);
    out = std::chrono::milliseconds(ms);
  }

  std::optional<Section> Child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return std::optional<Section>(std::in_place, *it, Key(key));
  }

  const json& raw() const { return j_; }
  void MarkAll() {
    for (const auto& [k, v] : j_.items()) seen_.insert(k);
  }
  std::string Key(const std::string& k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadHttp(Section& s, HttpEndpoint& e) {
  s.Get("base_url", e.base_url);
  s.Get("path", e.path);
  s.Get("token_env", e.token_env);
  s.GetMillis("timeout_ms", e.timeout);
}

ProviderSpec ReadProvider(Section& s) {
  ProviderSpec p;
  s.Get("kind", p.kind);
  s.Get("path", p.path);
  s.Get("dimension", p.dimension);
  s.Get("seed", p.seed);
  ReadHttp(s, p.http);
  s.Finish();
  if (p.kind != "hashed" && p.kind != "fixture" && p.kind != "http" &&
      p.kind != "none") {
    throw ConfigError("provider kind must be hashed, fixture, http or none: " +
                      p.kind);
  }
  if (p.kind == "none") p.kind.clear();
  return p;
}

TaskType TaskTypeFrom(const std::string& label, const std::string& key) {
  auto t = ParseTaskType(label);
  if (!t) throw ConfigError(key + ": unknown task type '" + label + "'");
  return *t;
}

}  // namespace

Config LoadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }

  Config c;
  Section top(root, "");
  if (auto s = top.Child("endpoint")) {
    s->Get("base_url", c.endpoint.base_url);
    s->Get("path", c.endpoint.path);
    s->Get("model", c.endpoint.model);
    s->Get("token_env", c.endpoint.token_env);
    s->GetMillis("timeout_ms", c.endpoint.timeout);
    s->Get("requests_per_minute", c.endpoint.requests_per_minute);
    s->Get("replay", c.replay);
    s->Finish();
  }
  if (auto s = top.Child("retry")) {
    s->Get("max_attempts", c.retry.max_attempts);
    s->GetMillis("backoff_base_ms", c.retry.backoff_base);
    s->GetMillis("max_backoff_ms", c.retry.max_backoff);
    s->Finish();
  }
  if (auto s = top.Child("generation")) {
    auto& g = c.generation;
    s->Get("seeds_per_prompt", g.seeds_per_prompt);
    s->Get("target_count", g.target_count);
    s->Get("temperature", g.temperature);
    s->Get("max_in_flight", g.max_in_flight);
    s->Get("dedup_threshold", g.dedup_threshold);
    s->Get("max_requests", g.max_requests);
    s->Get("seed", g.seed);
    s->Get("directive", g.directive);
    std::string fallback;
    s->Get("fallback_task_type", fallback);
    if (!fallback.empty()) {
      g.fallback_task_type = TaskTypeFrom(fallback, "generation.fallback_task_type");
    }
    s->Finish();
  }
  if (auto s = top.Child("personas")) {
    s->MarkAll();
    c.personas.clear();
    for (const auto& [k, v] : s->raw().items()) {
      auto tag = ParseSourceTag(k);
      if (!tag || *tag == SourceTag::kGenerated || !v.is_string()) {
        throw ConfigError("personas." + k + ": expected MMUCC or HSM with a string");
      }
      c.personas[*tag] = v.get<std::string>();
    }
    s->Finish();
  }
  if (auto s = top.Child("templates")) {
    s->MarkAll();
    for (const auto& [k, v] : s->raw().items()) {
      if (!v.is_string()) throw ConfigError("templates." + k + ": expected a string");
      try {
        c.templates.Set(TaskTypeFrom(k, "templates." + k), v.get<std::string>());
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    }
    s->Finish();
  }
  if (auto s = top.Child("metrics")) {
    auto& m = c.metrics;
    s->Get("compose", m.normalization.compose);
    s->Get("lowercase", m.normalization.lowercase);
    s->Get("detach_punctuation", m.normalization.detach_punctuation);
    s->Get("bleu_max_n", m.bleu.max_n);
    s->Get("bleu_epsilon", m.bleu.epsilon);
    std::string smoothing = "add-epsilon";
    s->Get("bleu_smoothing", smoothing);
    if (smoothing == "none") {
      m.bleu.smoothing = BleuSmoothing::kNone;
    } else if (smoothing != "add-epsilon") {
      throw ConfigError("metrics.bleu_smoothing must be none or add-epsilon");
    }
    s->Get("idf", c.idf);
    if (auto e = s->Child("embeddings")) c.embeddings = ReadProvider(*e);
    if (auto b = s->Child("bleurt")) c.bleurt = ReadProvider(*b);
    if (c.embeddings.kind.empty()) {
      throw ConfigError("metrics.embeddings: an embedding provider is required");
    }
    s->Finish();
  }
  if (auto s = top.Child("freeze")) {
    s->Get("last_n_blocks", c.freeze.last_n_blocks);
    s->Get("include_head", c.freeze.include_head);
    s->Get("include_final_norm", c.freeze.include_final_norm);
    s->Finish();
  }
  if (auto s = top.Child("train")) {
    s->MarkAll();
    for (const auto& [k, v] : s->raw().items()) {
      if (v.is_string()) {
        c.train_overrides[k] = v.get<std::string>();
      } else if (v.is_number()) {
        c.train_overrides[k] = v.dump();
      } else {
        throw ConfigError("train." + k + ": expected a number");
      }
    }
    s->Finish();
  }
  if (auto s = top.Child("eval")) {
    s->Get("threads", c.threads);
    s->Get("strict", c.strict);
    s->Finish();
  }
  top.Finish();
  return c;
}

std::unique_ptr<EmbeddingProvider> MakeEmbeddings(const ProviderSpec& spec,
                                                  const RetryPolicy& retry,
                                                  std::string* name) {
  if (spec.kind == "fixture") {
    *name = "fixture:" + spec.path;
    return std::make_unique<FixtureEmbeddingProvider>(
        FixtureEmbeddingProvider::FromFile(spec.path));
  }
  if (spec.kind == "http") {
    *name = "http:" + spec.http.base_url + spec.http.path;
    return std::make_unique<HttpEmbeddingProvider>(spec.http, retry);
  }
  *name = "hashed-" + std::to_string(spec.dimension);
  return std::make_unique<HashedEmbeddingProvider>(spec.dimension, spec.seed);
}

std::unique_ptr<BleurtProvider> MakeBleurt(const ProviderSpec& spec,
                                           const RetryPolicy& retry) {
  if (spec.kind == "fixture") {
    return std::make_unique<FixtureBleurtProvider>(
        FixtureBleurtProvider::FromFile(spec.path));
  }
  if (spec.kind == "http") {
    return std::make_unique<HttpBleurtProvider>(spec.http, retry);
  }
  if (spec.kind == "hashed") {
    throw ConfigError("metrics.bleurt: hashed is not a BLEURT provider");
  }
  return nullptr;
}

std::shared_ptr<ChatTransport> MakeTransport(const Config& config,
                                             const std::string& replay) {
  const std::string& file = replay.empty() ? config.replay : replay;
  if (!file.empty()) {
    return std::make_shared<ReplayChatTransport>(ReplayChatTransport::FromFile(file));
  }
  return std::make_shared<HttpChatTransport>(config.endpoint);
}

}  // namespace safetune::cli
