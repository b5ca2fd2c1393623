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

#ifndef SAFETUNE_PROVIDERS_H_
#define SAFETUNE_PROVIDERS_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "safetune/retry.h"
#include "safetune/text_norm.h"

namespace safetune {

// Contract: one d-dimensional vector per token, same order as the request.
// Implementations must be safe to call from several threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> Embed(
      const TokenSequence& tokens) const = 0;
};

struct TextPair {
  std::string candidate;
  std::string reference;
};

// Contract: one real score per pair, same order as the request.
class BleurtProvider {
 public:
  virtual ~BleurtProvider() = default;
  virtual std::vector<double> Score(const std::vector<TextPair>& pairs) = 0;
};

// Context-free vectors derived from a 64-bit hash of each token, so equal
// tokens get equal vectors on every platform and run.
class HashedEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashedEmbeddingProvider(std::size_t dimension = 64,
                                   std::uint64_t seed = 0x5afe7u);
  std::vector<std::vector<double>> Embed(
      const TokenSequence& tokens) const override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

// Orthonormal basis over a fixed vocabulary. Unknown tokens throw
// InvalidArgument.
class OneHotEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit OneHotEmbeddingProvider(const std::vector<Token>& vocabulary);
  std::vector<std::vector<double>> Embed(
      const TokenSequence& tokens) const override;

 private:
  std::map<Token, std::size_t> index_;
};

// Replays precomputed vectors. The file holds one JSON object per line:
//   {"tokens": [...], "vectors": [[...], ...]}
// and requests are matched by their exact token list.
class FixtureEmbeddingProvider : public EmbeddingProvider {
 public:
  static FixtureEmbeddingProvider FromFile(const std::string& path);
  std::vector<std::vector<double>> Embed(
      const TokenSequence& tokens) const override;

  void Add(TokenSequence tokens, std::vector<std::vector<double>> vectors);

 private:
  std::map<TokenSequence, std::vector<std::vector<double>>> entries_;
};

// Replays BLEURT scores. One JSON object per line:
//   {"pairs": [{"candidate": ..., "reference": ...}, ...], "scores": [...]}
class FixtureBleurtProvider : public BleurtProvider {
 public:
  static FixtureBleurtProvider FromFile(const std::string& path);
  std::vector<double> Score(const std::vector<TextPair>& pairs) override;

  void Add(const TextPair& pair, double score);

 private:
  std::map<std::pair<std::string, std::string>, double> scores_;
};

struct HttpEndpoint {
  std::string base_url;   // scheme://host[:port]
  std::string path;       // e.g. /embed
  std::string token_env;  // env var holding a bearer token, may be empty
  std::chrono::milliseconds timeout{30000};
};

// POST {"tokens": [...]} -> {"vectors": [[...], ...]}
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpEndpoint endpoint, RetryPolicy retry,
                        Sleeper sleep = RealSleep);
  std::vector<std::vector<double>> Embed(
      const TokenSequence& tokens) const override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

// POST {"pairs": [{"candidate", "reference"}, ...]} -> {"scores": [...]}
class HttpBleurtProvider : public BleurtProvider {
 public:
  HttpBleurtProvider(HttpEndpoint endpoint, RetryPolicy retry,
                     Sleeper sleep = RealSleep);
  std::vector<double> Score(const std::vector<TextPair>& pairs) override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

}  // namespace safetune

#endif  // SAFETUNE_PROVIDERS_H_
