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

#ifndef SAFETUNE_METRICS_H_
#define SAFETUNE_METRICS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "safetune/error.h"
#include "safetune/text_norm.h"

namespace safetune {

class EmbeddingProvider;
class BleurtProvider;

// All scores are on the 0-100 scale.
struct PrfTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // f1 is the harmonic mean, 0 when precision + recall == 0.
  static PrfTriple From(double precision, double recall);
};

struct ScoreSet {
  double bleu = 0.0;
  PrfTriple rouge1;
  PrfTriple rouge2;
  PrfTriple rougeL;
  PrfTriple bert;
  std::optional<double> bleurt;  // provider-defined range
  std::size_t word_count = 0;
  // False when a provider failed and some fields hold placeholders.
  bool complete = true;
};

enum class BleuSmoothing { kNone, kAddEpsilon };

struct BleuOptions {
  int max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::kAddEpsilon;
  double epsilon = 1e-9;
};

// Sentence BLEU against a single reference. The geometric mean runs over
// orders 1..min(max_n, len(candidate)), so a short candidate is not zeroed
// by orders it cannot contain. Empty candidate scores 0; empty reference
// throws InvalidArgument.
double bleu(const TokenSequence& candidate, const TokenSequence& reference,
            const BleuOptions& options = {});

// Clipped n-gram overlap. A side with no n-grams yields 0 for its ratio.
PrfTriple rouge_n(const TokenSequence& candidate,
                  const TokenSequence& reference, int n);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

PrfTriple rouge_l(const TokenSequence& candidate,
                  const TokenSequence& reference);

// Per-token vectors with every row L2-normalized on construction.
class EmbeddingMatrix {
 public:
  // Throws InvalidArgument on ragged rows, zero dimension, zero-norm rows
  // or a row/token count mismatch.
  EmbeddingMatrix(TokenSequence tokens, std::vector<std::vector<double>> rows);

  std::size_t size() const { return tokens_.size(); }
  std::size_t dimension() const { return dim_; }
  const TokenSequence& tokens() const { return tokens_; }
  const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
  bool empty() const { return tokens_.empty(); }

 private:
  TokenSequence tokens_;
  std::vector<std::vector<double>> rows_;
  std::size_t dim_ = 0;
};

// Token -> importance weight. Tokens absent from the table weigh 1.
using IdfTable = std::unordered_map<Token, double>;

// idf(w) = ln((M + 1) / (df(w) + 1)) over M reference documents.
IdfTable compute_idf(const std::vector<TokenSequence>& documents);

// Greedy max-cosine matching. Per-token best similarities are floored at 0
// so the result stays in [0, 100].
PrfTriple bertscore(const EmbeddingMatrix& candidate,
                    const EmbeddingMatrix& reference,
                    const IdfTable* idf = nullptr);

std::size_t word_count(std::string_view text);

struct MetricConfig {
  NormalizationOptions normalization;
  BleuOptions bleu;
  bool use_idf = false;
  IdfTable idf;
};

// Raised by score_pair when a provider stays unreachable after its retry
// budget. `partial` carries every metric that could be computed.
class ProviderError : public EndpointError {
 public:
  ProviderError(const std::string& what, ScoreSet partial)
      : EndpointError(what, false), partial_(std::move(partial)) {}
  const ScoreSet& partial() const { return partial_; }

 private:
  ScoreSet partial_;
};

// Scores one candidate against one reference with every metric. BERTScore
// uses `embeddings`; BLEURT is queried only when `bleurt` is non-null.
ScoreSet score_pair(std::string_view candidate, std::string_view reference,
                    const MetricConfig& config,
                    const EmbeddingProvider& embeddings,
                    BleurtProvider* bleurt = nullptr);

}  // namespace safetune

#endif  // SAFETUNE_METRICS_H_
