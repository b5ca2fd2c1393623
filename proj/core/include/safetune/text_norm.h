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

#ifndef SAFETUNE_TEXT_NORM_H_
#define SAFETUNE_TEXT_NORM_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace safetune {

// A token is a non-empty UTF-8 string without whitespace. Sequences keep
// source order.
using Token = std::string;
using TokenSequence = std::vector<Token>;
using NGram = std::vector<Token>;

struct NormalizationOptions {
  bool compose = true;             // NFC
  bool lowercase = true;
  bool detach_punctuation = true;  // leading/trailing punctuation -> tokens
};

// Splits `text` on unicode whitespace after normalization. Leading and
// trailing punctuation characters of each word become single-character
// tokens; punctuation inside a word ("don't", "10,000") stays attached.
// Invalid UTF-8 bytes are replaced with U+FFFD.
TokenSequence tokenize(std::string_view text,
                       const NormalizationOptions& options = {});

// Plain unicode-whitespace split with no normalization.
std::vector<std::string> split_whitespace(std::string_view text);

std::string join(const TokenSequence& tokens, std::string_view sep = " ");

struct NGramMultiset {
  int n = 1;
  std::map<NGram, std::size_t> counts;

  // Sum of multiplicities, max(0, len - n + 1) for the source sequence.
  std::size_t total() const;
  std::size_t count(const NGram& gram) const;
};

// All contiguous windows of length n with multiplicity. Throws
// InvalidArgument when n < 1.
NGramMultiset ngrams(const TokenSequence& seq, int n);

}  // namespace safetune

#endif  // SAFETUNE_TEXT_NORM_H_
