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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echograph/features.hpp"
#include "echograph/vocab.hpp"

namespace echograph {

/// Opaque per-hypothesis state owned by a scorer or language model.
struct ScorerState {
  virtual ~ScorerState() = default;
};
using StatePtr = std::shared_ptr<const ScorerState>;

struct StepOutput {
  Eigen::VectorXd logits;     // V entries
  Eigen::VectorXd attention;  // one weight per encoded frame, sums to 1
  StatePtr next_state;
};

/// What the beam search decodes against. step() must be a pure function of
/// (state, prev).
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual int vocab_size() const = 0;
  /// Encodes the input and returns the decoder's initial state.
  virtual StatePtr encode(const FeatureSequence& features) const = 0;
  virtual StepOutput step(const StatePtr& state, TokenId prev) const = 0;
};

/// Deterministic scorer that provably loops.
///
/// The first `trap_after` steps force `forced_tokens` (cycled). After that
/// every step puts probability p_loop on `loop_token`, (1 - p_loop) * eos_share
/// on EOS and spreads the rest uniformly over the remaining non-BOS tokens.
/// Post-trap attention peaks on one fixed frame (the last one by default).
struct PathologicalConfig {
  int vocab_size = 32;
  TokenId loop_token = 2;  // "HU"
  int trap_after = 2;
  double p_loop = 0.9;
  double eos_share = 0.9;
  std::vector<TokenId> forced_tokens = {4, 3};
  /// Frame the attention stalls on; negative counts from the end.
  int stall_frame = -1;
  /// Attention mass on the peak frame; the rest is spread uniformly.
  double peak_mass = 0.7;
};

class PathologicalScorer final : public Scorer {
 public:
  explicit PathologicalScorer(PathologicalConfig config);

  int vocab_size() const override { return config_.vocab_size; }
  StatePtr encode(const FeatureSequence& features) const override;
  StepOutput step(const StatePtr& state, TokenId prev) const override;

  /// Log-probability the post-trap distribution gives to `token`.
  double post_trap_log_prob(TokenId token) const;
  const PathologicalConfig& config() const { return config_; }

 private:
  PathologicalConfig config_;
};

/// Replays externally dumped per-step (logits, attention) logs.
///
/// Log format: JSON lines {"utterance_id", "step", "logits": [...],
/// "attention": [...]}. Step k of the search returns the k-th logged row for
/// the utterance whatever the previous token; past the end of the log the
/// scorer forces EOS.
class ReplayScorer final : public Scorer {
 public:
  static ReplayScorer from_file(const std::filesystem::path& path);
  ReplayScorer(int vocab_size,
               std::map<std::string, std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>> rows);

  int vocab_size() const override { return vocab_size_; }
  StatePtr encode(const FeatureSequence& features) const override;
  StepOutput step(const StatePtr& state, TokenId prev) const override;

 private:
  int vocab_size_;
  std::map<std::string, std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>> rows_;
};

}  // namespace echograph
