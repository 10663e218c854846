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

#include "echograph/lm.hpp"

#include <cmath>

#include "echograph/error.hpp"
#include "train_loop.hpp"

namespace echograph {

namespace {

struct EmptyState final : ScorerState {};

struct RnnState final : ScorerState {
  ad::Var h;
  ad::Var c;
};

Eigen::VectorXd log_softmax(const Eigen::VectorXd& z) {
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return (z.array() - lse).matrix();
}

}  // namespace

StatePtr UniformLm::start() const { return std::make_shared<EmptyState>(); }

LmStep UniformLm::step(const StatePtr& state, TokenId prev) const {
  if (prev < 0 || prev >= vocab_size_) throw DomainError("invalid token id " + std::to_string(prev));
  return {Eigen::VectorXd::Constant(vocab_size_, -std::log(static_cast<double>(vocab_size_))), state};
}

std::map<std::string, std::int64_t> RnnLmConfig::to_map() const {
  return {{"vocab_size", vocab_size}, {"embed_dim", embed_dim}, {"hidden", hidden}};
}

RnnLmConfig RnnLmConfig::from_map(const std::map<std::string, std::int64_t>& m) {
  RnnLmConfig c;
  try {
    c.vocab_size = static_cast<int>(m.at("vocab_size"));
    c.embed_dim = static_cast<int>(m.at("embed_dim"));
    c.hidden = static_cast<int>(m.at("hidden"));
  } catch (const std::out_of_range&) {
    throw ParseError("language-model checkpoint config is incomplete");
  }
  return c;
}

RnnLm::RnnLm(RnnLmConfig config, std::uint64_t seed) : config_(config) {
  if (config_.vocab_size < 4 || config_.embed_dim < 1 || config_.hidden < 1) {
    throw ConfigError("invalid language-model configuration");
  }
  Rng rng = make_rng(seed, "init/lm");
  params_.add("lm.embed", nn::uniform_init(rng, config_.embed_dim, config_.vocab_size, 0.1));
  nn::LstmCell{"lm.lstm", config_.embed_dim, config_.hidden}.declare(params_, rng);
  params_.add("lm.Wo", Eigen::MatrixXd::Zero(config_.vocab_size, config_.hidden));
  params_.add("lm.bo", Eigen::MatrixXd::Zero(config_.vocab_size, 1));
}

RnnLm::RnnLm(RnnLmConfig config, nn::ParamSet params) : config_(config), params_(std::move(params)) {
  RnnLm reference(config_, 0);
  if (reference.params_.size() != params_.size()) {
    throw ShapeError("language-model parameters do not match the configuration");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = reference.params_.var(i)->value;
    const auto& b = params_.var(i)->value;
    if (reference.params_.name(i) != params_.name(i) || a.rows() != b.rows() || a.cols() != b.cols()) {
      throw ShapeError("language-model parameter '" + params_.name(i) + "' has the wrong shape");
    }
  }
}

std::pair<ad::Var, ad::Var> RnnLm::advance(const ad::Var& h, const ad::Var& c, TokenId prev,
                                           ad::Var* logits) const {
  if (prev < 0 || prev >= config_.vocab_size) {
    throw DomainError("invalid token id " + std::to_string(prev));
  }
  const nn::LstmCell cell{"lm.lstm", config_.embed_dim, config_.hidden};
  auto next = cell.step(params_, ad::column(params_.get("lm.embed"), prev), h, c);
  *logits = ad::add(ad::matmul(params_.get("lm.Wo"), next.first), params_.get("lm.bo"));
  return next;
}

StatePtr RnnLm::start() const {
  auto s = std::make_shared<RnnState>();
  s->h = ad::constant(Eigen::MatrixXd::Zero(config_.hidden, 1));
  s->c = s->h;
  return s;
}

LmStep RnnLm::step(const StatePtr& state, TokenId prev) const {
  ad::NoGradGuard no_grad;
  auto* s = dynamic_cast<const RnnState*>(state.get());
  if (s == nullptr) throw InputError("state was not produced by this language model");
  ad::Var logits;
  auto [h, c] = advance(s->h, s->c, prev, &logits);
  auto next = std::make_shared<RnnState>();
  next->h = h;
  next->c = c;
  return {log_softmax(logits->value.col(0)), std::move(next)};
}

std::pair<ad::Var, int> RnnLm::sequence_loss(const std::vector<TokenId>& tokens) const {
  ad::Var h = ad::constant(Eigen::MatrixXd::Zero(config_.hidden, 1));
  ad::Var c = h;
  std::vector<ad::Var> terms;
  TokenId prev = TokenVocab::kBos;
  for (std::size_t k = 0; k <= tokens.size(); ++k) {
    const TokenId target = k < tokens.size() ? tokens[k] : TokenVocab::kEos;
    ad::Var logits;
    std::tie(h, c) = advance(h, c, prev, &logits);
    terms.push_back(ad::smoothed_cross_entropy(logits, target, 0.0));
    prev = target;
  }
  return {ad::sum(ad::concat_rows(terms)), static_cast<int>(terms.size())};
}

RnnLm train_lm(const Corpus& train, const RnnLmConfig& config, const TrainConfig& train_config,
               const TrainLog& log) {
  std::vector<const std::vector<TokenId>*> texts;
  for (const Utterance& u : train) {
    if (!u.reference_tokens.empty()) texts.push_back(&u.reference_tokens);
  }
  if (texts.empty()) throw ConfigError("no reference text to train the language model on");
  RnnLm lm(config, train_config.seed);
  auto monitor = [&] {
    ad::NoGradGuard no_grad;
    double total = 0.0;
    long n = 0;
    for (const auto* t : texts) {
      auto [loss, terms] = lm.sequence_loss(*t);
      total += loss->value(0, 0);
      n += terms;
    }
    return total / static_cast<double>(n);
  };
  detail::run_descent(
      lm.params(), texts.size(), train_config, "lm", {},
      [&](std::size_t i) { return lm.sequence_loss(*texts[i]); }, monitor, log);
  lm.params().round_to_float();
  return lm;
}

}  // namespace echograph
