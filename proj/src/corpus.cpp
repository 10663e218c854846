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

#include "echograph/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "echograph/error.hpp"
#include "echograph/random.hpp"

namespace echograph {

std::string to_string(Domain d) {
  return d == Domain::kInDomain ? "in_domain" : "out_of_domain";
}

Domain domain_from_string(const std::string& s) {
  if (s == "in_domain") return Domain::kInDomain;
  if (s == "out_of_domain") return Domain::kOutOfDomain;
  throw ConfigError("unknown domain '" + s + "'");
}

void CorpusSpec::validate() const {
  if (n_utterances < 1) throw ConfigError("n_utterances must be positive");
  if (vocab_size < 4) throw ConfigError("vocabulary size must be >= 4");
  if (!(min_seconds > 0.0) || !(max_seconds > 0.0)) {
    throw ConfigError("duration range must be positive");
  }
  if (min_seconds > max_seconds) throw ConfigError("min_seconds exceeds max_seconds");
  if (!(noise >= 0.0)) throw ConfigError("noise level must be nonnegative");
  if (feature_dim < 1 || motif_frames < 1) throw ConfigError("feature_dim and motif_frames must be >= 1");
  if (!(frame_period_ms > 0.0)) throw ConfigError("frame period must be positive");
  if (ood_noise_multiplier < 2.0) throw ConfigError("ood_noise_multiplier must be >= 2");
  if (!(ood_noise_floor >= 0.0)) throw ConfigError("ood_noise_floor must be nonnegative");
  const double token_s = motif_frames * frame_period_ms / 1000.0;
  const auto lo = static_cast<long>(std::ceil(min_seconds / token_s - 1e-9));
  const auto hi = static_cast<long>(std::floor(max_seconds / token_s + 1e-9));
  if (std::max(lo, 1L) > hi) {
    throw ConfigError("no whole token count fits the duration range");
  }
}

namespace {

Eigen::MatrixXd random_motif(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace

SyntheticWorld::SyntheticWorld(std::uint64_t world_seed, int vocab_size, int feature_dim,
                               int motif_frames)
    : vocab_(vocab_size), feature_dim_(feature_dim), motif_frames_(motif_frames) {
  Rng motif_rng = make_rng(world_seed, "motifs");
  for (int id = 0; id < vocab_size; ++id) {
    in_domain_motifs_.push_back(random_motif(motif_rng, motif_frames, feature_dim));
  }
  for (int id = 0; id < vocab_size; ++id) {
    out_of_domain_motifs_.push_back(random_motif(motif_rng, motif_frames, feature_dim));
  }

  Rng lex_rng = make_rng(world_seed, "lexicon");
  const int n_initial = vocab_.num_word_initial();
  const int n_cont = vocab_size - 2 - n_initial;
  const int capacity = n_initial * (1 + n_cont);
  const int n_words = std::min(2 * n_initial, capacity);
  std::uniform_int_distribution<int> pick_initial(2, 1 + n_initial);
  std::uniform_int_distribution<int> pick_cont(2 + n_initial, std::max(2 + n_initial, vocab_size - 1));
  std::bernoulli_distribution two_pieces(n_cont > 0 ? 0.4 : 0.0);
  std::set<std::vector<TokenId>> seen;
  while (static_cast<int>(lexicon_.size()) < n_words) {
    std::vector<TokenId> word = {pick_initial(lex_rng)};
    if (two_pieces(lex_rng)) word.push_back(pick_cont(lex_rng));
    if (seen.insert(word).second) lexicon_.push_back(word);
  }

  const int fanout = std::min(3, n_words);
  std::uniform_int_distribution<int> pick_word(0, n_words - 1);
  std::uniform_real_distribution<double> weight(0.2, 1.0);
  successors_.resize(n_words);
  for (int w = 0; w < n_words; ++w) {
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < fanout) chosen.insert(pick_word(lex_rng));
    double total = 0.0;
    for (int next : chosen) {
      const double p = weight(lex_rng);
      successors_[w].emplace_back(next, p);
      total += p;
    }
    for (auto& [next, p] : successors_[w]) p /= total;
  }
}

const Eigen::MatrixXd& SyntheticWorld::motif(TokenId id, Domain domain) const {
  if (!vocab_.valid(id)) throw DomainError("unknown token id " + std::to_string(id));
  return domain == Domain::kInDomain ? in_domain_motifs_[id] : out_of_domain_motifs_[id];
}

Eigen::MatrixXd render_tokens(const SyntheticWorld& world, const std::vector<TokenId>& tokens,
                              Domain domain) {
  const int m = world.motif_frames();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tokens.size()) * m, world.feature_dim());
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    out.middleRows(static_cast<Eigen::Index>(k) * m, m) = world.motif(tokens[k], domain);
  }
  return out;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const SyntheticWorld world(spec.world_seed, spec.vocab_size, spec.feature_dim, spec.motif_frames);
  const TokenVocab& vocab = world.vocab();
  const int n_words = static_cast<int>(world.lexicon().size());

  const double token_s = spec.motif_frames * spec.frame_period_ms / 1000.0;
  const long lo = std::max(1L, static_cast<long>(std::ceil(spec.min_seconds / token_s - 1e-9)));
  const long hi = static_cast<long>(std::floor(spec.max_seconds / token_s + 1e-9));
  const bool ood = spec.domain == Domain::kOutOfDomain;
  const double noise_std =
      ood ? std::max(spec.ood_noise_multiplier * spec.noise, spec.ood_noise_floor) : spec.noise;
  const double bias = ood ? spec.ood_bias : 0.0;

  Rng rng = make_rng(spec.seed, ood ? "corpus/ood" : "corpus/in");
  std::uniform_int_distribution<long> pick_count(lo, hi);
  std::uniform_int_distribution<int> pick_word(0, n_words - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Corpus corpus;
  corpus.reserve(spec.n_utterances);
  for (int u = 0; u < spec.n_utterances; ++u) {
    const long target = pick_count(rng);
    std::vector<TokenId> tokens;
    int word = pick_word(rng);
    while (static_cast<long>(tokens.size()) < target) {
      for (TokenId t : world.lexicon()[word]) {
        if (static_cast<long>(tokens.size()) < hi) tokens.push_back(t);
      }
      double r = unit(rng);
      int next = world.successors(word).back().first;
      for (const auto& [cand, p] : world.successors(word)) {
        if (r < p) {
          next = cand;
          break;
        }
        r -= p;
      }
      word = next;
    }

    Utterance utt;
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%05d", spec.id_prefix.c_str(), u);
    utt.features.utterance_id = id;
    utt.features.frame_period_ms = spec.frame_period_ms;
    Eigen::MatrixXd frames = render_tokens(world, tokens, spec.domain);
    for (Eigen::Index i = 0; i < frames.rows(); ++i) {
      for (Eigen::Index j = 0; j < frames.cols(); ++j) {
        const double v = frames(i, j) + bias + noise_std * normal(rng);
        frames(i, j) = static_cast<double>(static_cast<float>(v));
      }
    }
    utt.features.frames = std::move(frames);
    utt.reference_tokens = tokens;
    utt.reference_text = vocab.detokenize(tokens);
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace echograph
