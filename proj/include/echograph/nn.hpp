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

#include <map>
#include <string>
#include <vector>

#include "echograph/autodiff.hpp"
#include "echograph/random.hpp"

namespace echograph::nn {

using ad::Var;

/// Named trainable tensors in declaration order. Copies share nothing.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet& other);
  ParamSet& operator=(const ParamSet& other);
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  /// Registers a tensor; the name must be unique.
  Var add(const std::string& name, Eigen::MatrixXd init);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return vars_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Var& var(std::size_t i) const { return vars_[i]; }
  std::size_t num_scalars() const;

  void zero_grad();
  double grad_norm() const;
  /// Scales every gradient so the global norm is at most max_norm.
  void clip_grad_norm(double max_norm);
  /// p -= lr * grad, skipping names in `frozen`.
  void sgd_step(double lr, const std::vector<std::string>& frozen = {});
  /// Rounds every value to float32 precision so checkpoints round-trip.
  void round_to_float();
  bool all_finite() const;
  bool operator==(const ParamSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Var> vars_;
  std::map<std::string, std::size_t> index_;
};

Eigen::MatrixXd uniform_init(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale);

/// Single-direction LSTM cell with a fused gate matrix W (4H x (X + H)) and
/// bias b (4H x 1). Gate order: input, forget, candidate, output.
struct LstmCell {
  std::string prefix;
  int input_dim = 0;
  int hidden = 0;

  void declare(ParamSet& params, Rng& rng) const;
  /// Returns {h, c}.
  std::pair<Var, Var> step(const ParamSet& params, const Var& x, const Var& h,
                           const Var& c) const;
};

/// Stack of bidirectional LSTM layers. Each direction has hidden/2 units and
/// the layer output concatenates them, so every frame maps to `hidden` values.
struct BiLstmEncoder {
  std::string prefix;
  int input_dim = 0;
  int hidden = 32;
  int layers = 1;

  void declare(ParamSet& params, Rng& rng) const;
  /// frames: d x T (columns are frames). Returns hidden x T.
  Var forward(const ParamSet& params, const Var& frames) const;

  std::vector<LstmCell> cells() const;
};

}  // namespace echograph::nn
