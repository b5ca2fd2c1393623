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

#include "safetune/providers.h"

#include <fstream>

#include "http_post.h"
#include "nlohmann/json.hpp"
#include "safetune/error.h"

namespace safetune {
namespace {

using nlohmann::json;

std::uint64_t Fnv1a(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

template <typename Fn>
void ForEachJsonLine(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open fixture file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what(),
                       lineno);
    }
  }
}

}  // namespace

HashedEmbeddingProvider::HashedEmbeddingProvider(std::size_t dimension,
                                                 std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be >= 1");
}

std::vector<std::vector<double>> HashedEmbeddingProvider::Embed(
    const TokenSequence& tokens) const {
  std::vector<std::vector<double>> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::uint64_t state = Fnv1a(t, seed_);
    std::vector<double> v(dimension_);
    for (auto& x : v) {
      // Uniform in [-1, 1) from the top 53 bits.
      x = static_cast<double>(SplitMix64(state) >> 11) * 0x1.0p-52 - 1.0;
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

OneHotEmbeddingProvider::OneHotEmbeddingProvider(
    const std::vector<Token>& vocabulary) {
  for (const auto& t : vocabulary) index_.emplace(t, index_.size());
  if (index_.empty()) throw InvalidArgument("one-hot vocabulary is empty");
}

std::vector<std::vector<double>> OneHotEmbeddingProvider::Embed(
    const TokenSequence& tokens) const {
  std::vector<std::vector<double>> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = index_.find(t);
    if (it == index_.end()) {
      throw InvalidArgument("token not in one-hot vocabulary: " + t);
    }
    std::vector<double> v(index_.size(), 0.0);
    v[it->second] = 1.0;
    rows.push_back(std::move(v));
  }
  return rows;
}

FixtureEmbeddingProvider FixtureEmbeddingProvider::FromFile(
    const std::string& path) {
  FixtureEmbeddingProvider p;
  ForEachJsonLine(path, [&](const json& j) {
    p.Add(j.at("tokens").get<TokenSequence>(),
          j.at("vectors").get<std::vector<std::vector<double>>>());
  });
  return p;
}

void FixtureEmbeddingProvider::Add(TokenSequence tokens,
                                   std::vector<std::vector<double>> vectors) {
  if (tokens.size() != vectors.size()) {
    throw DataError("embedding fixture: token/vector count mismatch");
  }
  entries_[std::move(tokens)] = std::move(vectors);
}

std::vector<std::vector<double>> FixtureEmbeddingProvider::Embed(
    const TokenSequence& tokens) const {
  auto it = entries_.find(tokens);
  if (it == entries_.end()) {
    throw EndpointError("no recorded embedding for request [" + join(tokens) +
                            "]",
                        false);
  }
  return it->second;
}

FixtureBleurtProvider FixtureBleurtProvider::FromFile(const std::string& path) {
  FixtureBleurtProvider p;
  ForEachJsonLine(path, [&](const json& j) {
    const auto& pairs = j.at("pairs");
    const auto& scores = j.at("scores");
    if (pairs.size() != scores.size()) {
      throw DataError("bleurt fixture: pair/score count mismatch");
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      p.Add({pairs[i].at("candidate").get<std::string>(),
             pairs[i].at("reference").get<std::string>()},
            scores[i].get<double>());
    }
  });
  return p;
}

void FixtureBleurtProvider::Add(const TextPair& pair, double score) {
  scores_[{pair.candidate, pair.reference}] = score;
}

std::vector<double> FixtureBleurtProvider::Score(
    const std::vector<TextPair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = scores_.find({p.candidate, p.reference});
    if (it == scores_.end()) {
      throw EndpointError("no recorded BLEURT score for pair", false);
    }
    out.push_back(it->second);
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint,
                                             RetryPolicy retry, Sleeper sleep)
    : endpoint_(std::move(endpoint)),
      retry_(retry),
      sleep_(std::move(sleep)) {}

std::vector<std::vector<double>> HttpEmbeddingProvider::Embed(
    const TokenSequence& tokens) const {
  const std::string body = json{{"tokens", tokens}}.dump();
  const std::string response = RetryWithBackoff(
      [&] {
        return internal::PostJson(endpoint_.base_url, endpoint_.path, body,
                                  internal::ReadEnv(endpoint_.token_env),
                                  endpoint_.timeout);
      },
      retry_, sleep_);
  try {
    auto vectors =
        json::parse(response).at("vectors").get<std::vector<std::vector<double>>>();
    if (vectors.size() != tokens.size()) {
      throw EndpointError("embedding endpoint returned " +
                              std::to_string(vectors.size()) + " vectors for " +
                              std::to_string(tokens.size()) + " tokens",
                          false);
    }
    return vectors;
  } catch (const json::exception& e) {
    throw EndpointError(std::string("malformed embedding response: ") + e.what(),
                        false);
  }
}

HttpBleurtProvider::HttpBleurtProvider(HttpEndpoint endpoint,
                                       RetryPolicy retry, Sleeper sleep)
    : endpoint_(std::move(endpoint)),
      retry_(retry),
      sleep_(std::move(sleep)) {}

std::vector<double> HttpBleurtProvider::Score(
    const std::vector<TextPair>& pairs) {
  json req = json::array();
  for (const auto& p : pairs) {
    req.push_back({{"candidate", p.candidate}, {"reference", p.reference}});
  }
  const std::string body = json{{"pairs", req}}.dump();
  const std::string response = RetryWithBackoff(
      [&] {
        return internal::PostJson(endpoint_.base_url, endpoint_.path, body,
                                  internal::ReadEnv(endpoint_.token_env),
                                  endpoint_.timeout);
      },
      retry_, sleep_);
  try {
    auto scores = json::parse(response).at("scores").get<std::vector<double>>();
    if (scores.size() != pairs.size()) {
      throw EndpointError("BLEURT endpoint returned wrong score count", false);
    }
    return scores;
  } catch (const json::exception& e) {
    throw EndpointError(std::string("malformed BLEURT response: ") + e.what(),
                        false);
  }
}

}  // namespace safetune
