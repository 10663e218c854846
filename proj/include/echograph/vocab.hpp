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

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace echograph {

using TokenId = int;

/// Wordpiece vocabulary of the synthetic grammar.
///
/// Ids are dense in [0, V). Id 0 is BOS and id 1 is EOS; both render empty.
/// Every other token has a two-letter uppercase surface and is either
/// word-initial (starts a new space-separated word) or a continuation piece.
/// Word-initial ids come first. Ids 2 and 3 are "HU" and "HM".
class TokenVocab {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;

  /// `size` >= 4. Roughly two thirds of the content tokens are word-initial.
  explicit TokenVocab(int size = 32);

  int size() const { return static_cast<int>(surfaces_.size()); }
  int num_word_initial() const { return num_initial_; }
  bool valid(TokenId id) const { return id >= 0 && id < size(); }
  bool is_special(TokenId id) const { return id == kBos || id == kEos; }
  bool word_initial(TokenId id) const { return id >= 2 && id < 2 + num_initial_; }
  const std::string& surface(TokenId id) const;

  /// Throws DomainError on an unknown id.
  std::string detokenize(std::span<const TokenId> tokens) const;

  /// Inverse of detokenize on strings produced by the synthetic grammar.
  /// Throws ParseError on text that cannot be segmented.
  std::vector<TokenId> tokenize(std::string_view text) const;

 private:
  std::vector<std::string> surfaces_;
  int num_initial_ = 0;
  std::unordered_map<std::string, TokenId> initial_lookup_;
  std::unordered_map<std::string, TokenId> continuation_lookup_;
};

/// Number of tokens that are neither BOS nor EOS.
std::size_t count_content_tokens(std::span<const TokenId> tokens);

}  // namespace echograph
