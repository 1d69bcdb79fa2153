// Copyright 2026 The EI Explain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EI_VOCAB_HPP_
#define EI_VOCAB_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ei/kernels.hpp"

namespace ei {

// Index 0 is never assigned to a token; it stands for an absent (masked)
// word everywhere in the engine.
inline constexpr TokenId kAbsent = 0;

// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(std::size_t pos) const { return pos >= start && pos < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

class Vocabulary {
 public:
  // Throws InvalidArgument if any index is <= 0, two tokens share an index,
  // or oov_index collides with a token index.
  Vocabulary(std::unordered_map<std::string, TokenId> token_to_index,
             TokenId oov_index);

  // Reads the JSON vocabulary format: {"token": index, ..., "oov_index": k}.
  static Vocabulary FromJson(std::string_view json_text);
  static Vocabulary Load(const std::string& path);

  TokenId Lookup(std::string_view token) const;
  TokenId oov_index() const { return oov_index_; }
  std::size_t size() const { return token_to_index_.size(); }

 private:
  std::unordered_map<std::string, TokenId> token_to_index_;
  TokenId oov_index_;
};

struct TokenizedSentence {
  std::vector<TokenId> indices;
  std::vector<std::string> tokens;

  std::size_t size() const { return indices.size(); }
};

// Lowercases, splits on whitespace and maps each token through the
// vocabulary. Unknown tokens get the OOV index, so the result never holds 0.
// Throws InvalidArgument when the text has no tokens.
TokenizedSentence Tokenize(std::string_view text, const Vocabulary& vocab);

// Original tokens of the span joined by single spaces.
std::string DetokenizeSpan(const TokenizedSentence& sentence, Span span);

}  // namespace ei

#endif  // EI_VOCAB_HPP_
