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
#include <span>
#include <vector>

#include "echograph/corpus.hpp"
#include "echograph/nn.hpp"
#include "echograph/seq2seq.hpp"

namespace echograph {

/// Guard applied to the rate inside log() of the Poisson NLL.
inline constexpr double kLambdaFloor = 1e-8;

struct LengthPredictorConfig {
  int raw_feature_dim = 8;
  int frame_stack = 3;
  int encoder_hidden = 32;
  int encoder_layers = 1;

  int input_dim() const { return raw_feature_dim * frame_stack; }
  std::map<std::string, std::int64_t> to_map() const;
  static LengthPredictorConfig from_map(const std::map<std::string, std::int64_t>& m);
  /// Same feature network shape as the acoustic model's encoder.
  static LengthPredictorConfig matching(const Seq2SeqConfig& model);
};

/// Poisson output-length model over acoustic features.
///
/// The rate is Lambda(X) = sum_t ReLU(a0 + b^T f(X)_t), where f is a
/// bidirectional LSTM over stacked frames and (a0, b) an affine head
/// ("head.a0" is 1x1, "head.b" is 1 x hidden).
class LengthPredictor {
 public:
  LengthPredictor(LengthPredictorConfig config, std::uint64_t seed);
  LengthPredictor(LengthPredictorConfig config, nn::ParamSet params);

  /// Copies the acoustic model's encoder weights into the feature network.
  /// Returns the number of scalars copied; throws ShapeError on mismatch.
  std::size_t init_from_encoder(const Seq2SeqModel& model);

  const LengthPredictorConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  /// Graph node for Lambda over raw (unstacked) features.
  ad::Var lambda_node(const FeatureSequence& raw) const;

 private:
  nn::BiLstmEncoder feature_net() const;

  LengthPredictorConfig config_;
  nn::ParamSet params_;
};

/// Lambda(X) >= 0. Throws ShapeError on a feature-dimension mismatch.
double lambda_forward(const LengthPredictor& model, const FeatureSequence& raw);

/// n log(Lambda) - Lambda - lgamma(n + 1). Lambda = 0 gives 0 at n = 0 and
/// -infinity otherwise. Throws DomainError for n < 0 or Lambda < 0.
double poisson_log_pmf(long n, double lambda);

/// Lambda - n log(max(Lambda, kLambdaFloor)) + lgamma(n + 1).
double poisson_nll(long n, double lambda);

/// d NLL / d Lambda = 1 - n / Lambda.
double poisson_nll_grad(long n, double lambda);

/// round(Lambda) with halves away from zero.
long round_half_away(double lambda);
long predict_length(const LengthPredictor& model, const FeatureSequence& raw);

struct LengthTrainConfig {
  TrainConfig descent{.epochs = 20, .batch_size = 8, .learning_rate = 0.01};
  /// Parameter names held fixed (for instance "head.b").
  std::vector<std::string> frozen;
  /// Set a0 to mean(N) / mean(T') and b to zero before training.
  bool data_init = true;
};

/// Fits the model by minimizing the Poisson NLL of the reference content-token
/// counts (BOS/EOS excluded). Starts from `init` when given.
LengthPredictor train_length_predictor(const Corpus& train, const LengthPredictorConfig& config,
                                       const LengthTrainConfig& train_config,
                                       const Seq2SeqModel* init = nullptr, const TrainLog& log = {});

/// Mean |predict_length - N| over utterances with references.
double length_mae(const LengthPredictor& model, const Corpus& corpus);

/// keep = floor(eta * n_hat + 1e-9). When the sequence has more than `keep`
/// content tokens, returns the first `keep` of them followed by EOS
/// (leading BOS preserved); otherwise returns the input unchanged. An
/// infinite eta disables truncation. Throws DomainError for eta < 1.
std::vector<TokenId> truncate(std::span<const TokenId> tokens, long n_hat, double eta);

/// Number of content tokens truncate() keeps.
long keep_count(long n_hat, double eta);

}  // namespace echograph
