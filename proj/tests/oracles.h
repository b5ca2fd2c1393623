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

// Brute-force reference computations for metric tests. Nothing here calls
// into the library's metric code.
#ifndef SAFETUNE_TESTS_ORACLES_H_
#define SAFETUNE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace safetune::oracle {

using Seq = std::vector<std::string>;

inline int WindowCount(const Seq& s, int n) {
  return std::max(0, static_cast<int>(s.size()) - n + 1);
}

// Clipped matches by explicit pairing: each reference window may be used
// at most once.
inline int ClippedMatches(const Seq& cand, const Seq& ref, int n) {
  const int cw = WindowCount(cand, n);
  const int rw = WindowCount(ref, n);
  std::vector<bool> used(static_cast<std::size_t>(rw), false);
  int matches = 0;
  for (int i = 0; i < cw; ++i) {
    for (int j = 0; j < rw; ++j) {
      if (!used[j] && std::equal(cand.begin() + i, cand.begin() + i + n,
                                 ref.begin() + j)) {
        used[j] = true;
        ++matches;
        break;
      }
    }
  }
  return matches;
}

struct Prf {
  double p, r, f;
};

inline Prf RougeN(const Seq& cand, const Seq& ref, int n) {
  const int m = ClippedMatches(cand, ref, n);
  const int cw = WindowCount(cand, n);
  const int rw = WindowCount(ref, n);
  const double p = cw ? 100.0 * m / cw : 0.0;
  const double r = rw ? 100.0 * m / rw : 0.0;
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

// Unsmoothed sentence BLEU over orders 1..min(max_n, |cand|).
inline double Bleu(const Seq& cand, const Seq& ref, int max_n) {
  if (cand.empty()) return 0.0;
  const int orders = std::min<int>(max_n, static_cast<int>(cand.size()));
  double prod = 1.0;
  for (int n = 1; n <= orders; ++n) {
    const int m = ClippedMatches(cand, ref, n);
    if (m == 0) return 0.0;
    prod *= static_cast<double>(m) / static_cast<double>(WindowCount(cand, n));
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::pow(prod, 1.0 / orders);
}

inline bool IsSubsequence(const Seq& sub, const Seq& s) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < s.size() && j < sub.size(); ++i) {
    if (s[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Tries every subsequence of `a` (2^|a| subsets).
inline std::size_t Lcs(const Seq& a, const Seq& b) {
  std::size_t best = 0;
  const std::uint32_t subsets = 1u << a.size();
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    Seq sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && IsSubsequence(sub, b)) best = sub.size();
  }
  return best;
}

// All sequences over `alphabet` with lengths in [0, max_len].
inline std::vector<Seq> AllSequences(const Seq& alphabet, int max_len) {
  std::vector<Seq> out{{}};
  std::vector<Seq> frontier{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<Seq> next;
    for (const Seq& s : frontier) {
      for (const auto& a : alphabet) {
        Seq t = s;
        t.push_back(a);
        next.push_back(t);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

inline Seq RandomSeq(std::mt19937_64& rng, const Seq& alphabet,
                     std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  Seq s(len(rng));
  for (auto& t : s) t = alphabet[pick(rng)];
  return s;
}

// Fraction (0-100) of tokens in `from` whose type appears in `to`.
inline double TypeCoverage(const Seq& from, const Seq& to) {
  if (from.empty()) return 0.0;
  int hit = 0;
  for (const auto& t : from) {
    if (std::find(to.begin(), to.end(), t) != to.end()) ++hit;
  }
  return 100.0 * hit / static_cast<double>(from.size());
}

}  // namespace safetune::oracle

#endif  // SAFETUNE_TESTS_ORACLES_H_
