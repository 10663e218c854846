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

#include "echograph/lenpred.hpp"

#include <cmath>
#include <limits>

#include "echograph/error.hpp"
#include "train_loop.hpp"

namespace echograph {

std::map<std::string, std::int64_t> LengthPredictorConfig::to_map() const {
  return {{"raw_feature_dim", raw_feature_dim},
          {"frame_stack", frame_stack},
          {"encoder_hidden", encoder_hidden},
          {"encoder_layers", encoder_layers}};
}

LengthPredictorConfig LengthPredictorConfig::from_map(const std::map<std::string, std::int64_t>& m) {
  LengthPredictorConfig c;
  try {
    c.raw_feature_dim = static_cast<int>(m.at("raw_feature_dim"));
    c.frame_stack = static_cast<int>(m.at("frame_stack"));
    c.encoder_hidden = static_cast<int>(m.at("encoder_hidden"));
    c.encoder_layers = static_cast<int>(m.at("encoder_layers"));
  } catch (const std::out_of_range&) {
    throw ParseError("length-predictor checkpoint config is incomplete");
  }
  return c;
}

LengthPredictorConfig LengthPredictorConfig::matching(const Seq2SeqConfig& model) {
  return {model.raw_feature_dim, model.frame_stack, model.encoder_hidden, model.encoder_layers};
}

nn::BiLstmEncoder LengthPredictor::feature_net() const {
  // Same parameter names as the acoustic encoder so weights copy by name.
  return {"enc", config_.input_dim(), config_.encoder_hidden, config_.encoder_layers};
}

LengthPredictor::LengthPredictor(LengthPredictorConfig config, std::uint64_t seed) : config_(config) {
  if (config_.raw_feature_dim < 1 || config_.frame_stack < 1 || config_.encoder_layers < 1) {
    throw ConfigError("invalid length-predictor configuration");
  }
  Rng rng = make_rng(seed, "init/lenpred");
  feature_net().declare(params_, rng);
  params_.add("head.a0", Eigen::MatrixXd::Constant(1, 1, 0.5));
  params_.add("head.b", nn::uniform_init(rng, 1, config_.encoder_hidden, 0.01));
}

LengthPredictor::LengthPredictor(LengthPredictorConfig config, nn::ParamSet params)
    : config_(config), params_(std::move(params)) {
  LengthPredictor reference(config_, 0);
  if (reference.params_.size() != params_.size()) {
    throw ShapeError("length-predictor parameters do not match the configuration");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = reference.params_.var(i)->value;
    const auto& b = params_.var(i)->value;
    if (reference.params_.name(i) != params_.name(i) || a.rows() != b.rows() || a.cols() != b.cols()) {
      throw ShapeError("length-predictor parameter '" + params_.name(i) + "' has the wrong shape");
    }
  }
}

std::size_t LengthPredictor::init_from_encoder(const Seq2SeqModel& model) {
  std::size_t copied = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    if (name.rfind("enc.", 0) != 0) continue;
    if (!model.params().contains(name)) throw ShapeError("acoustic model lacks encoder tensor " + name);
    const auto& src = model.params().get(name)->value;
    auto& dst = params_.var(i)->value;
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw ShapeError("encoder tensor " + name + " has a different shape");
    }
    dst = src;
    copied += static_cast<std::size_t>(src.size());
  }
  return copied;
}

ad::Var LengthPredictor::lambda_node(const FeatureSequence& raw) const {
  if (raw.num_frames() < 1) throw InputError("empty feature sequence");
  if (raw.dim() != config_.raw_feature_dim) {
    throw ShapeError("length predictor expects feature dimension " +
                     std::to_string(config_.raw_feature_dim) + ", got " + std::to_string(raw.dim()));
  }
  const FeatureSequence stacked = stack_frames(raw, config_.frame_stack);
  const ad::Var features = feature_net().forward(params_, ad::constant(stacked.frames.transpose()));
  const ad::Var affine = ad::add_colwise(
      ad::matmul(params_.get("head.b"), features),
      params_.get("head.a0"));  // 1 x T'
  return ad::sum(ad::relu(affine));
}

double lambda_forward(const LengthPredictor& model, const FeatureSequence& raw) {
  ad::NoGradGuard no_grad;
  return model.lambda_node(raw)->value(0, 0);
}

double poisson_log_pmf(long n, double lambda) {
  if (n < 0) throw DomainError("Poisson count must be nonnegative");
  if (!(lambda >= 0.0)) throw DomainError("Poisson rate must be nonnegative");
  if (lambda == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(n) + 1.0);
}

double poisson_nll(long n, double lambda) {
  if (n < 0) throw DomainError("Poisson count must be nonnegative");
  return lambda - static_cast<double>(n) * std::log(std::max(lambda, kLambdaFloor)) +
         std::lgamma(static_cast<double>(n) + 1.0);
}

double poisson_nll_grad(long n, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("gradient needs a positive rate");
  return 1.0 - static_cast<double>(n) / lambda;
}

long round_half_away(double lambda) { return std::lround(lambda); }

long predict_length(const LengthPredictor& model, const FeatureSequence& raw) {
  return round_half_away(lambda_forward(model, raw));
}

LengthPredictor train_length_predictor(const Corpus& train, const LengthPredictorConfig& config,
                                       const LengthTrainConfig& train_config, const Seq2SeqModel* init,
                                       const TrainLog& log) {
  std::vector<const Utterance*> items;
  for (const Utterance& u : train) {
    if (!u.reference_tokens.empty()) items.push_back(&u);
  }
  if (items.empty()) throw ConfigError("no labeled utterances to train the length predictor on");
  LengthPredictor model(config, train_config.descent.seed);
  if (init != nullptr) model.init_from_encoder(*init);
  if (train_config.data_init) {
    double tokens = 0.0;
    double frames = 0.0;
    for (const Utterance* u : items) {
      tokens += static_cast<double>(count_content_tokens(u->reference_tokens));
      frames += static_cast<double>((u->features.num_frames() + config.frame_stack - 1) / config.frame_stack);
    }
    model.params().get("head.a0")->value(0, 0) = tokens / frames;
    model.params().get("head.b")->value.setZero();
  }
  auto item_loss = [&](std::size_t i) -> std::pair<ad::Var, int> {
    const Utterance& u = *items[i];
    const auto n = static_cast<long>(count_content_tokens(u.reference_tokens));
    return {ad::poisson_nll(model.lambda_node(u.features), n, kLambdaFloor), 1};
  };
  auto monitor = [&] {
    ad::NoGradGuard no_grad;
    double total = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) total += item_loss(i).first->value(0, 0);
    return total / static_cast<double>(items.size());
  };
  detail::run_descent(model.params(), items.size(), train_config.descent, "lenpred", train_config.frozen,
                      item_loss, monitor, log);
  model.params().round_to_float();
  return model;
}

double length_mae(const LengthPredictor& model, const Corpus& corpus) {
  double total = 0.0;
  long n = 0;
  for (const Utterance& u : corpus) {
    if (u.reference_tokens.empty()) continue;
    const auto ref = static_cast<long>(count_content_tokens(u.reference_tokens));
    total += std::abs(static_cast<double>(predict_length(model, u.features) - ref));
    ++n;
  }
  return n > 0 ? total / static_cast<double>(n) : 0.0;
}

long keep_count(long n_hat, double eta) {
  if (std::isnan(eta) || eta < 1.0) throw DomainError("truncation multiple must be >= 1");
  if (n_hat < 0) throw DomainError("predicted length must be nonnegative");
  if (std::isinf(eta)) return std::numeric_limits<long>::max();
  return static_cast<long>(std::floor(eta * static_cast<double>(n_hat) + 1e-9));
}

std::vector<TokenId> truncate(std::span<const TokenId> tokens, long n_hat, double eta) {
  const long keep = keep_count(n_hat, eta);
  if (static_cast<long>(count_content_tokens(tokens)) <= keep) {
    return {tokens.begin(), tokens.end()};
  }
  std::vector<TokenId> out;
  long kept = 0;
  for (TokenId t : tokens) {
    if (t == TokenVocab::kBos) {
      if (out.empty()) out.push_back(t);
      continue;
    }
    if (t == TokenVocab::kEos) continue;
    if (kept == keep) break;
    out.push_back(t);
    ++kept;
  }
  out.push_back(TokenVocab::kEos);
  return out;
}

}  // namespace echograph
