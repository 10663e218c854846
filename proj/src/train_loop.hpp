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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "echograph/error.hpp"
#include "echograph/seq2seq.hpp"

namespace echograph::detail {

/// Shared minibatch gradient-descent loop: global-norm clipping, plain SGD
/// updates and halve-on-plateau of the monitored loss after every epoch.
///
/// item_loss(i) returns (summed loss node, number of loss terms) for item i.
/// monitor() returns a per-term loss evaluated without gradients.
template <typename ItemLoss, typename Monitor>
void run_descent(nn::ParamSet& params, std::size_t n_items, const TrainConfig& config,
                 const std::string& stream, const std::vector<std::string>& frozen,
                 ItemLoss&& item_loss, Monitor&& monitor, const TrainLog& log) {
  if (config.batch_size < 1 || config.epochs < 0 || !(config.learning_rate > 0.0)) {
    throw ConfigError("invalid training configuration");
  }
  Rng shuffle_rng = make_rng(config.seed, "shuffle/" + stream);
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);
  double lr = config.learning_rate;
  double best = monitor();
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      params.zero_grad();
      std::vector<std::pair<ad::Var, int>> losses;
      int terms = 0;
      for (std::size_t k = start; k < end; ++k) {
        losses.push_back(item_loss(order[k]));
        terms += losses.back().second;
      }
      double batch_loss = 0.0;
      for (auto& [loss, n] : losses) {
        const ad::Var scaled = ad::scale(loss, 1.0 / std::max(terms, 1));
        ad::backward(scaled);
        batch_loss += scaled->value(0, 0);
        loss.reset();
      }
      if (!std::isfinite(batch_loss)) throw TrainingDivergence("non-finite " + stream + " loss", step);
      params.clip_grad_norm(config.clip_norm);
      params.sgd_step(lr, frozen);
      if (!params.all_finite()) throw TrainingDivergence("non-finite " + stream + " parameters", step);
      if (log) log({step, epoch, batch_loss, lr});
      ++step;
    }
    const double current = monitor();
    if (!std::isfinite(current)) throw TrainingDivergence("non-finite held-out " + stream + " loss", step);
    if (current > best * (1.0 - config.plateau_tolerance)) {
      lr = std::max(config.min_learning_rate, lr * 0.5);
    }
    best = std::min(best, current);
  }
}

}  // namespace echograph::detail
