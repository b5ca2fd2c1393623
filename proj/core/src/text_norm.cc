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

#include "safetune/text_norm.h"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf16.h>

#include "safetune/error.h"

namespace safetune {
namespace {

bool IsPunctuation(UChar32 c) {
  // Symbols such as '$' or '+' are treated like punctuation for detachment.
  return u_ispunct(c) || u_charType(c) == U_MATH_SYMBOL ||
         u_charType(c) == U_CURRENCY_SYMBOL ||
         u_charType(c) == U_MODIFIER_SYMBOL;
}

std::string ToUtf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

icu::UnicodeString Normalize(std::string_view text,
                             const NormalizationOptions& options) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (options.compose || options.lowercase) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
      throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    if (options.compose) s = nfc->normalize(s, status);
    if (options.lowercase) {
      s.toLower(icu::Locale::getRoot());
      // Lowercasing can leave decomposed sequences behind.
      if (options.compose) s = nfc->normalize(s, status);
    }
    if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  }
  return s;
}

// Visits maximal runs of non-whitespace code points.
template <typename Fn>
void ForEachWord(const icu::UnicodeString& s, Fn&& fn) {
  int32_t i = 0;
  const int32_t len = s.length();
  while (i < len) {
    while (i < len && u_isUWhiteSpace(s.char32At(i))) i = s.moveIndex32(i, 1);
    if (i >= len) break;
    int32_t start = i;
    while (i < len && !u_isUWhiteSpace(s.char32At(i))) i = s.moveIndex32(i, 1);
    fn(start, i);
  }
}

}  // namespace

TokenSequence tokenize(std::string_view text,
                       const NormalizationOptions& options) {
  const icu::UnicodeString s = Normalize(text, options);
  TokenSequence tokens;
  ForEachWord(s, [&](int32_t start, int32_t end) {
    if (!options.detach_punctuation) {
      tokens.push_back(ToUtf8(s.tempSubStringBetween(start, end)));
      return;
    }
    std::vector<std::string> trailing;
    int32_t lo = start;
    int32_t hi = end;
    while (lo < hi && IsPunctuation(s.char32At(lo))) {
      int32_t next = s.moveIndex32(lo, 1);
      tokens.push_back(ToUtf8(s.tempSubStringBetween(lo, next)));
      lo = next;
    }
    while (hi > lo) {
      int32_t prev = s.moveIndex32(hi, -1);
      if (!IsPunctuation(s.char32At(prev))) break;
      trailing.push_back(ToUtf8(s.tempSubStringBetween(prev, hi)));
      hi = prev;
    }
    if (lo < hi) tokens.push_back(ToUtf8(s.tempSubStringBetween(lo, hi)));
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
  });
  return tokens;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  NormalizationOptions raw;
  raw.compose = false;
  raw.lowercase = false;
  raw.detach_punctuation = false;
  return tokenize(text, raw);
}

std::string join(const TokenSequence& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

std::size_t NGramMultiset::total() const {
  std::size_t sum = 0;
  for (const auto& [gram, c] : counts) sum += c;
  return sum;
}

std::size_t NGramMultiset::count(const NGram& gram) const {
  auto it = counts.find(gram);
  return it == counts.end() ? 0 : it->second;
}

NGramMultiset ngrams(const TokenSequence& seq, int n) {
  if (n < 1) throw InvalidArgument("ngrams: n must be >= 1");
  NGramMultiset out;
  out.n = n;
  const auto width = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + width <= seq.size(); ++i) {
    ++out.counts[NGram(seq.begin() + i, seq.begin() + i + width)];
  }
  return out;
}

}  // namespace safetune
