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
#include <vector>

#include "echograph/nn.hpp"
#include "echograph/scorer.hpp"
#include "echograph/seq2seq.hpp"

namespace echograph {

struct LmStep {
  Eigen::VectorXd log_probs;  // V entries, logsumexp = 0
  StatePtr next_state;
};

/// Token-level language model for shallow fusion.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual int vocab_size() const = 0;
  virtual StatePtr start() const = 0;
  /// Throws DomainError when prev is not a valid id.
  virtual LmStep step(const StatePtr& state, TokenId prev) const = 0;
};

class UniformLm final : public LanguageModel {
 public:
  explicit UniformLm(int vocab_size) : vocab_size_(vocab_size) {}
  int vocab_size() const override { return vocab_size_; }
  StatePtr start() const override;
  LmStep step(const StatePtr& state, TokenId prev) const override;

 private:
  int vocab_size_;
};

struct RnnLmConfig {
  int vocab_size = 32;
  int embed_dim = 16;
  int hidden = 16;

  std::map<std::string, std::int64_t> to_map() const;
  static RnnLmConfig from_map(const std::map<std::string, std::int64_t>& m);
};

/// Single-layer LSTM language model. The output layer starts at zero, so an
/// untrained model is exactly uniform.
class RnnLm final : public LanguageModel {
 public:
  RnnLm(RnnLmConfig config, std::uint64_t seed);
  RnnLm(RnnLmConfig config, nn::ParamSet params);

  int vocab_size() const override { return config_.vocab_size; }
  StatePtr start() const override;
  LmStep step(const StatePtr& state, TokenId prev) const override;

  const RnnLmConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  /// Summed cross entropy of `tokens` followed by EOS, and the number of
  /// predicted positions.
  std::pair<ad::Var, int> sequence_loss(const std::vector<TokenId>& tokens) const;

 private:
  std::pair<ad::Var, ad::Var> advance(const ad::Var& h, const ad::Var& c, TokenId prev, ad::Var* logits) const;

  RnnLmConfig config_;
  nn::ParamSet params_;
};

/// Trains on the corpus' reference token sequences with the same optimizer
/// as the acoustic model (no label smoothing).
RnnLm train_lm(const Corpus& train, const RnnLmConfig& config, const TrainConfig& train_config,
               const TrainLog& log = {});

}  // namespace echograph
