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

#include "echograph/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "echograph/error.hpp"
#include "echograph/metrics.hpp"
#include "train_loop.hpp"

namespace echograph {

std::map<std::string, std::int64_t> Seq2SeqConfig::to_map() const {
  return {{"vocab_size", vocab_size},         {"raw_feature_dim", raw_feature_dim},
          {"frame_stack", frame_stack},       {"encoder_hidden", encoder_hidden},
          {"encoder_layers", encoder_layers}, {"embed_dim", embed_dim},
          {"decoder_hidden", decoder_hidden}, {"attention_dim", attention_dim},
          {"output_hidden", output_hidden}};
}

Seq2SeqConfig Seq2SeqConfig::from_map(const std::map<std::string, std::int64_t>& m) {
  auto get = [&](const char* key) -> int {
    auto it = m.find(key);
    if (it == m.end()) throw ParseError(std::string("checkpoint config lacks '") + key + "'");
    return static_cast<int>(it->second);
  };
  Seq2SeqConfig c;
  c.vocab_size = get("vocab_size");
  c.raw_feature_dim = get("raw_feature_dim");
  c.frame_stack = get("frame_stack");
  c.encoder_hidden = get("encoder_hidden");
  c.encoder_layers = get("encoder_layers");
  c.embed_dim = get("embed_dim");
  c.decoder_hidden = get("decoder_hidden");
  c.attention_dim = get("attention_dim");
  c.output_hidden = get("output_hidden");
  return c;
}

Seq2SeqModel::Seq2SeqModel(Seq2SeqConfig config, std::uint64_t seed) : config_(config) {
  declare(seed);
}

Seq2SeqModel::Seq2SeqModel(Seq2SeqConfig config, nn::ParamSet params)
    : config_(config), params_(std::move(params)) {
  Seq2SeqModel reference(config_, 0);
  if (reference.params_.size() != params_.size()) {
    throw ShapeError("parameter count does not match the model configuration");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = reference.params_.var(i)->value;
    const auto& b = params_.var(i)->value;
    if (reference.params_.name(i) != params_.name(i) || a.rows() != b.rows() || a.cols() != b.cols()) {
      throw ShapeError("parameter '" + params_.name(i) + "' does not match the model configuration");
    }
  }
}

nn::BiLstmEncoder Seq2SeqModel::encoder() const {
  return {"enc", config_.input_dim(), config_.encoder_hidden, config_.encoder_layers};
}

void Seq2SeqModel::declare(std::uint64_t seed) {
  const Seq2SeqConfig& c = config_;
  if (c.vocab_size < 4 || c.frame_stack < 1 || c.raw_feature_dim < 1 || c.embed_dim < 1 ||
      c.decoder_hidden < 1 || c.attention_dim < 1 || c.output_hidden < 1 || c.encoder_layers < 1) {
    throw ConfigError("invalid seq2seq configuration");
  }
  Rng rng = make_rng(seed, "init/seq2seq");
  encoder().declare(params_, rng);
  params_.add("dec.embed", nn::uniform_init(rng, c.embed_dim, c.vocab_size, 0.1));
  nn::LstmCell{"dec.lstm", c.embed_dim + c.encoder_hidden, c.decoder_hidden}.declare(params_, rng);
  const double sa = 1.0 / std::sqrt(static_cast<double>(c.attention_dim));
  params_.add("att.W", nn::uniform_init(rng, c.attention_dim, c.encoder_hidden, sa));
  params_.add("att.U", nn::uniform_init(rng, c.attention_dim, c.decoder_hidden, sa));
  params_.add("att.b", Eigen::MatrixXd::Zero(c.attention_dim, 1));
  params_.add("att.v", nn::uniform_init(rng, c.attention_dim, 1, sa));
  const double sc = 1.0 / std::sqrt(static_cast<double>(c.decoder_hidden + c.encoder_hidden));
  params_.add("out.Wc", nn::uniform_init(rng, c.output_hidden, c.decoder_hidden + c.encoder_hidden, sc));
  params_.add("out.bc", Eigen::MatrixXd::Zero(c.output_hidden, 1));
  const double so = 1.0 / std::sqrt(static_cast<double>(c.output_hidden));
  params_.add("out.Wo", nn::uniform_init(rng, c.vocab_size, c.output_hidden, so));
  params_.add("out.bo", Eigen::MatrixXd::Zero(c.vocab_size, 1));
}

ad::Var Seq2SeqModel::encode_memory(const FeatureSequence& stacked) const {
  if (stacked.num_frames() < 1) throw InputError("empty feature sequence");
  if (stacked.dim() != config_.input_dim()) {
    throw ShapeError("model expects stacked feature dimension " + std::to_string(config_.input_dim()) +
                     ", got " + std::to_string(stacked.dim()));
  }
  return encoder().forward(params_, ad::constant(stacked.frames.transpose()));
}

Eigen::MatrixXd Seq2SeqModel::encode(const FeatureSequence& stacked) const {
  ad::NoGradGuard no_grad;
  return encode_memory(stacked)->value.transpose();
}

Seq2SeqModel::DecoderState Seq2SeqModel::initial_state(const ad::Var& memory) const {
  DecoderState s;
  s.memory = memory;
  s.keys = ad::matmul(params_.get("att.W"), memory);
  s.h = ad::constant(Eigen::MatrixXd::Zero(config_.decoder_hidden, 1));
  s.c = s.h;
  s.context = ad::constant(Eigen::MatrixXd::Zero(config_.encoder_hidden, 1));
  return s;
}

Seq2SeqModel::Step Seq2SeqModel::decode_step(const DecoderState& state, TokenId prev) const {
  if (prev < 0 || prev >= config_.vocab_size) {
    throw DomainError("invalid token id " + std::to_string(prev));
  }
  const ad::Var embedded = ad::column(params_.get("dec.embed"), prev);
  const ad::Var input_parts[] = {embedded, state.context};
  const nn::LstmCell cell{"dec.lstm", config_.embed_dim + config_.encoder_hidden, config_.decoder_hidden};
  auto [h, c] = cell.step(params_, ad::concat_rows(input_parts), state.h, state.c);

  const ad::Var query = ad::add(ad::matmul(params_.get("att.U"), h), params_.get("att.b"));
  const ad::Var energies = ad::matmul_tn(ad::tanh(ad::add_colwise(state.keys, query)), params_.get("att.v"));
  const ad::Var attention = ad::softmax(energies);
  const ad::Var context = ad::matmul(state.memory, attention);

  const ad::Var out_parts[] = {h, context};
  const ad::Var hidden = ad::tanh(
      ad::add(ad::matmul(params_.get("out.Wc"), ad::concat_rows(out_parts)), params_.get("out.bc")));
  const ad::Var logits = ad::add(ad::matmul(params_.get("out.Wo"), hidden), params_.get("out.bo"));

  Step step;
  step.logits = logits;
  step.attention = attention;
  step.next = {state.memory, state.keys, h, c, context};
  return step;
}

std::pair<ad::Var, int> Seq2SeqModel::sequence_loss(const FeatureSequence& raw,
                                                    const std::vector<TokenId>& reference,
                                                    double label_smoothing) const {
  const FeatureSequence stacked = stack_frames(raw, config_.frame_stack);
  DecoderState state = initial_state(encode_memory(stacked));
  std::vector<ad::Var> terms;
  terms.reserve(reference.size() + 1);
  TokenId prev = TokenVocab::kBos;
  for (std::size_t k = 0; k <= reference.size(); ++k) {
    const TokenId target = k < reference.size() ? reference[k] : TokenVocab::kEos;
    Step step = decode_step(state, prev);
    terms.push_back(ad::smoothed_cross_entropy(step.logits, target, label_smoothing));
    state = std::move(step.next);
    prev = target;
  }
  return {ad::sum(ad::concat_rows(terms)), static_cast<int>(terms.size())};
}

std::vector<TokenId> Seq2SeqModel::greedy_decode(const FeatureSequence& raw, int max_tokens) const {
  ad::NoGradGuard no_grad;
  DecoderState state = initial_state(encode_memory(stack_frames(raw, config_.frame_stack)));
  std::vector<TokenId> out;
  TokenId prev = TokenVocab::kBos;
  for (int k = 0; k < max_tokens; ++k) {
    Step step = decode_step(state, prev);
    Eigen::Index best = 0;
    const Eigen::VectorXd z = step.logits->value.col(0);
    z.segment(1, z.size() - 1).maxCoeff(&best);  // BOS is never emitted
    prev = static_cast<TokenId>(best + 1);
    if (prev == TokenVocab::kEos) break;
    out.push_back(prev);
    state = std::move(step.next);
  }
  return out;
}

namespace {

struct ModelState final : ScorerState {
  Seq2SeqModel::DecoderState decoder;
};

}  // namespace

StatePtr Seq2SeqScorer::encode(const FeatureSequence& features) const {
  ad::NoGradGuard no_grad;
  features.validate();
  auto s = std::make_shared<ModelState>();
  s->decoder = model_.initial_state(
      model_.encode_memory(stack_frames(features, model_.config().frame_stack)));
  return s;
}

StepOutput Seq2SeqScorer::step(const StatePtr& state, TokenId prev) const {
  ad::NoGradGuard no_grad;
  auto* s = dynamic_cast<const ModelState*>(state.get());
  if (s == nullptr) throw InputError("state was not produced by this scorer");
  Seq2SeqModel::Step step = model_.decode_step(s->decoder, prev);
  StepOutput out;
  out.logits = step.logits->value.col(0);
  out.attention = step.attention->value.col(0);
  auto next = std::make_shared<ModelState>();
  next->decoder = std::move(step.next);
  out.next_state = std::move(next);
  return out;
}

Eigen::VectorXd smoothed_targets(int vocab_size, TokenId target, double eps) {
  if (target < 0 || target >= vocab_size) throw DomainError("target id out of range");
  Eigen::VectorXd q = Eigen::VectorXd::Constant(vocab_size, eps / vocab_size);
  q(target) += 1.0 - eps;
  return q;
}

namespace {

double corpus_loss_per_token(const Seq2SeqModel& model, const Corpus& corpus, double eps) {
  ad::NoGradGuard no_grad;
  double total = 0.0;
  long tokens = 0;
  for (const Utterance& u : corpus) {
    auto [loss, n] = model.sequence_loss(u.features, u.reference_tokens, eps);
    total += loss->value(0, 0);
    tokens += n;
  }
  return tokens > 0 ? total / tokens : 0.0;
}

}  // namespace

Seq2SeqModel train_seq2seq(const Corpus& train, const Corpus& held_out,
                           const Seq2SeqConfig& model_config, const TrainConfig& config,
                           const TrainLog& log) {
  if (train.empty()) throw ConfigError("training corpus is empty");
  for (const Utterance& u : train) {
    if (u.reference_tokens.empty()) {
      throw ConfigError("training utterance '" + u.features.utterance_id + "' has no reference");
    }
  }
  Seq2SeqModel model(model_config, config.seed);
  const Corpus& monitor = held_out.empty() ? train : held_out;
  detail::run_descent(
      model.params(), train.size(), config, "seq2seq", {},
      [&](std::size_t i) {
        return model.sequence_loss(train[i].features, train[i].reference_tokens, config.label_smoothing);
      },
      [&] { return corpus_loss_per_token(model, monitor, config.label_smoothing); }, log);
  model.params().round_to_float();
  return model;
}

double greedy_token_accuracy(const Seq2SeqModel& model, const Corpus& corpus, int max_tokens) {
  std::size_t errors = 0;
  std::size_t total = 0;
  for (const Utterance& u : corpus) {
    const auto hyp = model.greedy_decode(u.features, max_tokens);
    errors += edit_distance<TokenId>(u.reference_tokens, hyp);
    total += u.reference_tokens.size();
  }
  if (total == 0) return 1.0;
  return std::max(0.0, 1.0 - static_cast<double>(errors) / static_cast<double>(total));
}

}  // namespace echograph
