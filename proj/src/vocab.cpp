// Copyright 2026 The Echograph Authors.
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

#include "echograph/vocab.hpp"

#include <algorithm>
#include <set>

#include "echograph/error.hpp"

namespace echograph {

TokenVocab::TokenVocab(int size) {
  if (size < 4) throw ConfigError("vocabulary size must be >= 4, got " + std::to_string(size));
  const int content = size - 2;
  num_initial_ = std::max(2, (2 * content + 2) / 3);
  if (num_initial_ > content) num_initial_ = content;

  surfaces_ = {"", "", "HU", "HM"};
  std::set<std::string> used = {"HU", "HM"};
  // Consonant-vowel syllables first, then any remaining letter pairs.
  const std::string consonants = "BDFGKLMNPRSTVZ";
  const std::string vowels = "AEIOU";
  std::vector<std::string> pool;
  for (char c : consonants) {
    for (char v : vowels) pool.push_back(std::string{c, v});
  }
  for (char a = 'A'; a <= 'Z'; ++a) {
    for (char b = 'A'; b <= 'Z'; ++b) pool.push_back(std::string{a, b});
  }
  for (const auto& s : pool) {
    if (static_cast<int>(surfaces_.size()) >= size) break;
    if (used.insert(s).second) surfaces_.push_back(s);
  }
  if (static_cast<int>(surfaces_.size()) < size) {
    throw ConfigError("vocabulary size " + std::to_string(size) + " exceeds surface inventory");
  }
  surfaces_.resize(size);
  for (TokenId id = 2; id < size; ++id) {
    (word_initial(id) ? initial_lookup_ : continuation_lookup_)[surfaces_[id]] = id;
  }
}

const std::string& TokenVocab::surface(TokenId id) const {
  if (!valid(id)) throw DomainError("unknown token id " + std::to_string(id));
  return surfaces_[id];
}

std::string TokenVocab::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId id : tokens) {
    const std::string& s = surface(id);
    if (s.empty()) continue;
    if (word_initial(id) && !out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

std::vector<TokenId> TokenVocab::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ') {
      ++pos;
      continue;
    }
    const std::size_t end = std::min(text.find(' ', pos), text.size());
    const std::string_view word = text.substr(pos, end - pos);
    if (word.size() % 2 != 0) {
      throw ParseError("cannot segment word '" + std::string(word) + "'");
    }
    for (std::size_t k = 0; k < word.size(); k += 2) {
      const std::string piece(word.substr(k, 2));
      const auto& table = k == 0 ? initial_lookup_ : continuation_lookup_;
      auto it = table.find(piece);
      if (it == table.end()) {
        throw ParseError("unknown wordpiece '" + piece + "' in word '" + std::string(word) + "'");
      }
      out.push_back(it->second);
    }
    pos = end;
  }
  return out;
}

std::size_t count_content_tokens(std::span<const TokenId> tokens) {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](TokenId t) {
    return t != TokenVocab::kBos && t != TokenVocab::kEos;
  }));
}

}  // namespace echograph
