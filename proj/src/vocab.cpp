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

#include "ei/vocab.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "ei/errors.hpp"
#include "json.hpp"

namespace ei {

Vocabulary::Vocabulary(std::unordered_map<std::string, TokenId> token_to_index,
                       TokenId oov_index)
    : token_to_index_(std::move(token_to_index)), oov_index_(oov_index) {
  if (oov_index_ <= 0) {
    throw InvalidArgument("vocabulary: oov_index must be a positive integer");
  }
  std::unordered_set<TokenId> seen;
  seen.reserve(token_to_index_.size());
  for (const auto& [token, index] : token_to_index_) {
    if (index <= 0) {
      throw InvalidArgument("vocabulary: token '" + token +
                            "' has non-positive index " +
                            std::to_string(index));
    }
    if (index == oov_index_) {
      throw InvalidArgument("vocabulary: token '" + token +
                            "' collides with oov_index");
    }
    if (!seen.insert(index).second) {
      throw InvalidArgument("vocabulary: index " + std::to_string(index) +
                            " assigned to more than one token");
    }
  }
}

Vocabulary Vocabulary::FromJson(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("vocabulary: ") + e.what());
  }
  if (!doc.is_object()) {
    throw InvalidArgument("vocabulary: top level must be a JSON object");
  }
  if (!doc.contains("oov_index") || !doc["oov_index"].is_number_integer()) {
    throw InvalidArgument("vocabulary: missing integer \"oov_index\"");
  }

  auto to_index = [](const nlohmann::json& value, const std::string& key) {
    if (!value.is_number_integer()) {
      throw InvalidArgument("vocabulary: index of '" + key +
                            "' is not an integer");
    }
    const auto raw = value.get<std::int64_t>();
    if (raw > std::numeric_limits<TokenId>::max() ||
        raw < std::numeric_limits<TokenId>::min()) {
      throw InvalidArgument("vocabulary: index of '" + key +
                            "' is out of range");
    }
    return static_cast<TokenId>(raw);
  };

  std::unordered_map<std::string, TokenId> map;
  map.reserve(doc.size());
  for (const auto& [key, value] : doc.items()) {
    if (key == "oov_index") continue;
    map.emplace(key, to_index(value, key));
  }
  return Vocabulary(std::move(map), to_index(doc["oov_index"], "oov_index"));
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("vocabulary: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

TokenId Vocabulary::Lookup(std::string_view token) const {
  auto it = token_to_index_.find(std::string(token));
  return it == token_to_index_.end() ? oov_index_ : it->second;
}

TokenizedSentence Tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenizedSentence out;
  std::string current;
  auto flush = [&]() {
    if (current.empty()) return;
    out.indices.push_back(vocab.Lookup(current));
    out.tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  flush();
  if (out.indices.empty()) {
    throw InvalidArgument("tokenize: input text is empty");
  }
  return out;
}

std::string DetokenizeSpan(const TokenizedSentence& sentence, Span span) {
  if (span.start >= span.end || span.end > sentence.tokens.size()) {
    throw InvalidArgument("detokenize: span [" + std::to_string(span.start) +
                          "," + std::to_string(span.end) +
                          ") out of range for " +
                          std::to_string(sentence.tokens.size()) + " tokens");
  }
  std::string out;
  for (std::size_t k = span.start; k < span.end; ++k) {
    if (k > span.start) out.push_back(' ');
    out += sentence.tokens[k];
  }
  return out;
}

}  // namespace ei
