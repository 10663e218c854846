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

#include <filesystem>
#include <string>
#include <vector>

#include "echograph/lm.hpp"
#include "echograph/scorer.hpp"

namespace echograph {

struct DecoderConfig {
  int beam_width = 4;
  double k = 5.0;
  double alpha = 1.0;
  double lm_weight = 0.25;
  int max_output_tokens = 150;

  /// Throws ConfigError unless beam_width >= 1, k >= 0, 0 <= alpha <= 1,
  /// lm_weight >= 0 and max_output_tokens >= 1.
  void validate() const;
};

/// (K + length)^alpha / (K + 1)^alpha. Throws DomainError outside
/// K >= 0, 0 <= alpha <= 1.
double length_penalty(int length, double k, double alpha);

/// log_softmax(am_logits) + lm_weight * lm_log_probs. An empty lm vector
/// means no language model.
Eigen::VectorXd fused_step_scores(const Eigen::VectorXd& am_logits, const Eigen::VectorXd& lm_log_probs,
                                  double lm_weight);

struct Hypothesis {
  std::vector<TokenId> tokens;  // no BOS; ends in EOS when finished
  double log_prob = 0.0;        // accumulated fused score
  double normalized_score = 0.0;
  Eigen::MatrixXd attention_trace;  // one row per token in `tokens`
  bool finished = false;
};

struct DecodeResult {
  std::string utterance_id;
  Hypothesis best;
  std::vector<Hypothesis> n_best;  // normalized_score descending
  std::string transcript;
  int char_count = 0;
  int vocab_size = 0;
};

/// Total order used for ranking: higher normalized score, then shorter, then
/// lexicographically smaller tokens.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

/// Beam search with length normalization and shallow fusion.
///
/// Every step expands all active hypotheses (BOS is never emitted) and ranks
/// the candidates by log_prob / length_penalty(|Y|). EOS candidates among the
/// top beam_width move to the finished pool; the active set is refilled with
/// the best beam_width non-EOS candidates. The search stops when the top
/// beam_width candidates are all EOS or the active hypotheses reach
/// max_output_tokens. The result is the best finished hypothesis; the
/// hypotheses cut off at max_output_tokens are used only when none finished.
///
/// `lm` may be null; it is not consulted when lm_weight is 0.
DecodeResult beam_search(const Scorer& scorer, const LanguageModel* lm, const FeatureSequence& features,
                         const DecoderConfig& config);

// JSON-lines serialization of decode results. Each record carries
// utterance_id, tokens, transcript, char_count, log_prob, normalized_score,
// finished, n_best (score/log_prob/length) and the attention CSV path (or null).
std::string decode_result_json(const DecodeResult& result, const std::string& attention_csv);

/// Attention trace as CSV: a '#' header line, then one row per output step
/// and one column per encoder frame.
void write_attention_csv(const std::filesystem::path& path, const Eigen::MatrixXd& trace);
Eigen::MatrixXd read_attention_csv(const std::filesystem::path& path);

}  // namespace echograph
