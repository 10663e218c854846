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

#include <cstdint>
#include <string>
#include <vector>

#include "echograph/features.hpp"
#include "echograph/vocab.hpp"

namespace echograph {

struct Utterance {
  FeatureSequence features;
  /// Content tokens only (no BOS/EOS). May be empty for unlabeled audio.
  std::vector<TokenId> reference_tokens;
  std::string reference_text;

  bool operator==(const Utterance&) const = default;
};

using Corpus = std::vector<Utterance>;

enum class Domain { kInDomain, kOutOfDomain };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct CorpusSpec {
  int n_utterances = 100;
  double min_seconds = 5.0;
  double max_seconds = 15.0;
  int vocab_size = 32;
  Domain domain = Domain::kInDomain;
  /// In-domain Gaussian noise std. Out-of-domain noise is
  /// max(ood_noise_multiplier * noise, ood_noise_floor).
  double noise = 0.0;
  std::uint64_t seed = 1;

  /// Seed of the shared "world": motifs, lexicon and word transitions. Splits
  /// generated with the same world_seed share one feature-to-token mapping.
  std::uint64_t world_seed = 1;
  int feature_dim = 8;
  int motif_frames = 4;
  double frame_period_ms = 250.0;
  double ood_bias = 1.0;
  double ood_noise_multiplier = 3.0;
  double ood_noise_floor = 0.3;
  std::string id_prefix = "utt";

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

/// The fixed generative structure behind a family of corpora.
///
/// Each token owns an in-domain motif (motif_frames x feature_dim) and a
/// disjoint out-of-domain motif. Sentences are word sequences drawn from a
/// sparse Markov chain over a small lexicon of one- or two-piece words.
class SyntheticWorld {
 public:
  SyntheticWorld(std::uint64_t world_seed, int vocab_size, int feature_dim, int motif_frames);

  const TokenVocab& vocab() const { return vocab_; }
  int feature_dim() const { return feature_dim_; }
  int motif_frames() const { return motif_frames_; }
  const Eigen::MatrixXd& motif(TokenId id, Domain domain) const;
  const std::vector<std::vector<TokenId>>& lexicon() const { return lexicon_; }
  /// Successor distribution of word w: (word index, probability) pairs.
  const std::vector<std::pair<int, double>>& successors(int w) const { return successors_[w]; }

 private:
  TokenVocab vocab_;
  int feature_dim_;
  int motif_frames_;
  std::vector<Eigen::MatrixXd> in_domain_motifs_;
  std::vector<Eigen::MatrixXd> out_of_domain_motifs_;
  std::vector<std::vector<TokenId>> lexicon_;
  std::vector<std::vector<std::pair<int, double>>> successors_;
};

/// Deterministic in `spec`. Utterance durations are token_count * motif_frames
/// * frame_period; the token count is drawn so the duration lies inside
/// [min_seconds, max_seconds].
Corpus generate_corpus(const CorpusSpec& spec);

/// Renders a token sequence through a world's motifs without noise.
Eigen::MatrixXd render_tokens(const SyntheticWorld& world, const std::vector<TokenId>& tokens,
                              Domain domain);

}  // namespace echograph
