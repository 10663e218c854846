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
#include <functional>
#include <string>
#include <vector>

#include "echograph/corpus.hpp"
#include "echograph/nn.hpp"
#include "echograph/scorer.hpp"

namespace echograph {

struct Seq2SeqConfig {
  int vocab_size = 32;
  int raw_feature_dim = 8;
  int frame_stack = 3;
  int encoder_hidden = 32;  // both directions together
  int encoder_layers = 1;
  int embed_dim = 16;
  int decoder_hidden = 32;
  int attention_dim = 32;
  int output_hidden = 32;

  int input_dim() const { return raw_feature_dim * frame_stack; }
  std::map<std::string, std::int64_t> to_map() const;
  static Seq2SeqConfig from_map(const std::map<std::string, std::int64_t>& m);
};

/// Toy attention encoder-decoder: a bidirectional LSTM encoder over stacked
/// frames and an LSTM decoder with single-head additive attention and input
/// feeding.
///
/// decoder step:  s_t, c_t = LSTM([embed(y_{t-1}); ctx_{t-1}], s_{t-1}, c_{t-1})
///                e_j = v^T tanh(W_a h_j + U_a s_t + b_a),  a = softmax(e)
///                ctx_t = sum_j a_j h_j
///                logits = W_o tanh(W_c [s_t; ctx_t] + b_c) + b_o
class Seq2SeqModel {
 public:
  Seq2SeqModel(Seq2SeqConfig config, std::uint64_t seed);
  Seq2SeqModel(Seq2SeqConfig config, nn::ParamSet params);

  const Seq2SeqConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  nn::BiLstmEncoder encoder() const;

  /// Encoder memory for already-stacked features, hidden x T' (columns are frames).
  ad::Var encode_memory(const FeatureSequence& stacked) const;
  /// Public view: T' x hidden.
  Eigen::MatrixXd encode(const FeatureSequence& stacked) const;

  struct DecoderState {
    ad::Var memory;  // hidden x T'
    ad::Var keys;    // W_a * memory
    ad::Var h;
    ad::Var c;
    ad::Var context;
  };
  DecoderState initial_state(const ad::Var& memory) const;

  struct Step {
    ad::Var logits;
    ad::Var attention;
    DecoderState next;
  };
  /// Throws DomainError when prev is not a valid id.
  Step decode_step(const DecoderState& state, TokenId prev) const;

  /// Summed label-smoothed cross entropy of teacher-forced decoding of
  /// `reference` followed by EOS. Also returns the number of predicted tokens.
  std::pair<ad::Var, int> sequence_loss(const FeatureSequence& raw,
                                        const std::vector<TokenId>& reference,
                                        double label_smoothing) const;

  /// Greedy decode (argmax, stops at EOS or max_tokens). Returns content tokens.
  std::vector<TokenId> greedy_decode(const FeatureSequence& raw, int max_tokens) const;

 private:
  void declare(std::uint64_t seed);

  Seq2SeqConfig config_;
  nn::ParamSet params_;
};

/// Adapts a trained model to the Scorer interface (stacks frames on encode).
class Seq2SeqScorer final : public Scorer {
 public:
  explicit Seq2SeqScorer(const Seq2SeqModel& model) : model_(model) {}

  int vocab_size() const override { return model_.config().vocab_size; }
  StatePtr encode(const FeatureSequence& features) const override;
  StepOutput step(const StatePtr& state, TokenId prev) const override;

 private:
  const Seq2SeqModel& model_;
};

/// Label-smoothed target distribution: (1 - eps) on the target plus eps / V
/// everywhere.
Eigen::VectorXd smoothed_targets(int vocab_size, TokenId target, double eps);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 0.5;
  double clip_norm = 5.0;
  double label_smoothing = 0.05;
  /// Learning rate is halved whenever the held-out loss fails to improve by this fraction.
  double plateau_tolerance = 1e-3;
  double min_learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

struct LossPoint {
  long step = 0;
  int epoch = 0;
  double train_loss = 0.0;  // per token
  double learning_rate = 0.0;
};

using TrainLog = std::function<void(const LossPoint&)>;

/// Minibatch gradient descent with global-norm clipping and
/// halve-on-plateau. Deterministic given config.seed. Throws
/// TrainingDivergence naming the step when the loss turns non-finite.
Seq2SeqModel train_seq2seq(const Corpus& train, const Corpus& held_out, const Seq2SeqConfig& model_config,
                           const TrainConfig& config, const TrainLog& log = {});

/// 1 - (token edit distance / reference tokens) over the corpus, floored at 0.
double greedy_token_accuracy(const Seq2SeqModel& model, const Corpus& corpus, int max_tokens = 150);

}  // namespace echograph
