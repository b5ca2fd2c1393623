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

#include "safetune/metrics.h"

#include <algorithm>
#include <cmath>
#include <span>

#include "safetune/providers.h"

namespace safetune {
namespace {

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

using Window = std::span<const Token>;

// Start offsets of every length-n window, sorted lexicographically.
std::vector<Window> SortedWindows(const TokenSequence& seq, int n) {
  std::vector<Window> out;
  const auto width = static_cast<std::size_t>(n);
  if (seq.size() < width) return out;
  out.reserve(seq.size() - width + 1);
  for (std::size_t i = 0; i + width <= seq.size(); ++i) {
    out.emplace_back(seq.data() + i, width);
  }
  std::sort(out.begin(), out.end(), [](Window a, Window b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  return out;
}

int Compare(Window a, Window b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (int c = a[i].compare(b[i])) return c;
  }
  return 0;
}

// Sum over distinct n-grams of min(count in a, count in b): a merge of the
// two sorted window lists where every equal pair consumes one of each.
std::size_t ClippedOverlap(const std::vector<Window>& a,
                           const std::vector<Window>& b) {
  std::size_t i = 0, j = 0, overlap = 0;
  while (i < a.size() && j < b.size()) {
    const int c = Compare(a[i], b[j]);
    if (c == 0) {
      ++overlap;
      ++i;
      ++j;
    } else if (c < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  return overlap;
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Weight(const IdfTable* idf, const Token& t) {
  if (!idf) return 1.0;
  auto it = idf->find(t);
  return it == idf->end() ? 1.0 : it->second;
}

// Weighted mean over rows of `from` of their best similarity in `to`.
double GreedyMatch(const EmbeddingMatrix& from, const EmbeddingMatrix& to,
                   const IdfTable* idf) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < to.size(); ++j) {
      best = std::max(best, Dot(from.row(i), to.row(j)));
    }
    const double w = Weight(idf, from.tokens()[i]);
    num += w * std::min(best, 1.0);
    den += w;
  }
  return den > 0.0 ? 100.0 * num / den : 0.0;
}

}  // namespace

PrfTriple PrfTriple::From(double precision, double recall) {
  PrfTriple t;
  t.precision = precision;
  t.recall = recall;
  t.f1 = precision + recall > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
  return t;
}

double bleu(const TokenSequence& candidate, const TokenSequence& reference,
            const BleuOptions& options) {
  if (reference.empty()) throw InvalidArgument("bleu: reference is empty");
  if (options.max_n < 1) throw InvalidArgument("bleu: max_n must be >= 1");
  if (candidate.empty()) return 0.0;

  const int orders =
      std::min<int>(options.max_n, static_cast<int>(candidate.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= orders; ++n) {
    const auto cand = SortedWindows(candidate, n);
    const std::size_t matched = ClippedOverlap(cand, SortedWindows(reference, n));
    double p;
    if (matched == 0) {
      if (options.smoothing == BleuSmoothing::kNone) return 0.0;
      p = options.epsilon;
    } else {
      p = static_cast<double>(matched) / static_cast<double>(cand.size());
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::min(100.0, 100.0 * brevity * std::exp(log_sum / orders));
}

PrfTriple rouge_n(const TokenSequence& candidate,
                  const TokenSequence& reference, int n) {
  if (n < 1) throw InvalidArgument("rouge_n: n must be >= 1");
  const auto cand = SortedWindows(candidate, n);
  const auto ref = SortedWindows(reference, n);
  const std::size_t overlap = ClippedOverlap(cand, ref);
  return PrfTriple::From(Ratio(overlap, cand.size()), Ratio(overlap, ref.size()));
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  const TokenSequence& row = a.size() < b.size() ? a : b;
  const TokenSequence& col = a.size() < b.size() ? b : a;
  std::vector<std::size_t> prev(row.size() + 1, 0);
  std::vector<std::size_t> cur(row.size() + 1, 0);
  for (const auto& x : col) {
    for (std::size_t j = 1; j <= row.size(); ++j) {
      cur[j] = x == row[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[row.size()];
}

PrfTriple rouge_l(const TokenSequence& candidate,
                  const TokenSequence& reference) {
  const std::size_t l = lcs_length(candidate, reference);
  return PrfTriple::From(Ratio(l, candidate.size()),
                         Ratio(l, reference.size()));
}

EmbeddingMatrix::EmbeddingMatrix(TokenSequence tokens,
                                 std::vector<std::vector<double>> rows)
    : tokens_(std::move(tokens)), rows_(std::move(rows)) {
  if (tokens_.size() != rows_.size()) {
    throw InvalidArgument("embedding rows do not align with tokens");
  }
  if (rows_.empty()) return;
  dim_ = rows_.front().size();
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be >= 1");
  for (auto& r : rows_) {
    if (r.size() != dim_) throw InvalidArgument("ragged embedding rows");
    const double norm = std::sqrt(Dot(r, r));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw InvalidArgument("embedding row has zero or non-finite norm");
    }
    for (auto& x : r) x /= norm;
  }
}

IdfTable compute_idf(const std::vector<TokenSequence>& documents) {
  std::unordered_map<Token, std::size_t> df;
  for (const auto& doc : documents) {
    TokenSequence uniq = doc;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const auto& t : uniq) ++df[t];
  }
  IdfTable idf;
  const double m = static_cast<double>(documents.size());
  for (const auto& [t, d] : df) {
    idf[t] = std::log((m + 1.0) / (static_cast<double>(d) + 1.0));
  }
  return idf;
}

PrfTriple bertscore(const EmbeddingMatrix& candidate,
                    const EmbeddingMatrix& reference, const IdfTable* idf) {
  if (candidate.empty() || reference.empty()) {
    throw InvalidArgument("bertscore: empty embedding matrix");
  }
  if (candidate.dimension() != reference.dimension()) {
    throw InvalidArgument("bertscore: embedding dimension mismatch");
  }
  return PrfTriple::From(GreedyMatch(candidate, reference, idf),
                         GreedyMatch(reference, candidate, idf));
}

std::size_t word_count(std::string_view text) {
  return split_whitespace(text).size();
}

ScoreSet score_pair(std::string_view candidate, std::string_view reference,
                    const MetricConfig& config,
                    const EmbeddingProvider& embeddings,
                    BleurtProvider* bleurt) {
  const TokenSequence cand = tokenize(candidate, config.normalization);
  const TokenSequence ref = tokenize(reference, config.normalization);
  if (ref.empty()) throw InvalidArgument("score_pair: reference is empty");

  ScoreSet s;
  s.bleu = bleu(cand, ref, config.bleu);
  s.rouge1 = rouge_n(cand, ref, 1);
  s.rouge2 = rouge_n(cand, ref, 2);
  s.rougeL = rouge_l(cand, ref);
  s.word_count = word_count(candidate);

  std::string failure;
  if (!cand.empty()) {
    try {
      EmbeddingMatrix ce(cand, embeddings.Embed(cand));
      EmbeddingMatrix re(ref, embeddings.Embed(ref));
      s.bert = bertscore(ce, re, config.use_idf ? &config.idf : nullptr);
    } catch (const EndpointError& e) {
      s.complete = false;
      failure = std::string("embedding provider: ") + e.what();
    }
  }
  if (bleurt) {
    try {
      const auto scores = bleurt->Score(
          {TextPair{std::string(candidate), std::string(reference)}});
      if (scores.size() != 1) {
        throw EndpointError("BLEURT provider returned wrong score count", false);
      }
      s.bleurt = scores.front();
    } catch (const EndpointError& e) {
      s.complete = false;
      if (!failure.empty()) failure += "; ";
      failure += std::string("bleurt provider: ") + e.what();
    }
  }
  if (!s.complete) throw ProviderError(failure, s);
  return s;
}

}  // namespace safetune
