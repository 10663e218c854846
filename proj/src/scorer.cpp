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

#include "echograph/scorer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <json.hpp>

#include "echograph/error.hpp"

namespace echograph {

namespace {

struct CountingState final : ScorerState {
  std::string utterance_id;
  int step = 0;
  Eigen::Index frames = 0;
};

const CountingState& as_counting(const StatePtr& state) {
  auto* s = dynamic_cast<const CountingState*>(state.get());
  if (s == nullptr) throw InputError("state was not produced by this scorer");
  return *s;
}

Eigen::VectorXd peaked_attention(Eigen::Index frames, Eigen::Index peak, double peak_mass) {
  if (frames == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(frames, (1.0 - peak_mass) / (frames - 1));
  a(peak) = peak_mass;
  return a;
}

}  // namespace

PathologicalScorer::PathologicalScorer(PathologicalConfig config) : config_(std::move(config)) {
  const int v = config_.vocab_size;
  if (v < 3) throw ConfigError("pathological scorer needs at least 3 tokens");
  if (!(config_.p_loop > 0.0 && config_.p_loop < 1.0)) {
    throw ConfigError("p_loop must lie in (0, 1)");
  }
  if (!(config_.eos_share > 0.0 && config_.eos_share <= 1.0)) {
    throw ConfigError("eos_share must lie in (0, 1]");
  }
  if (config_.loop_token < 2 || config_.loop_token >= v) throw ConfigError("bad loop token");
  if (config_.trap_after < 0) throw ConfigError("trap_after must be nonnegative");
  if (config_.trap_after > 0 && config_.forced_tokens.empty()) {
    throw ConfigError("forced tokens required when trap_after > 0");
  }
  for (TokenId t : config_.forced_tokens) {
    if (t < 2 || t >= v) throw ConfigError("bad forced token " + std::to_string(t));
  }
  if (!(config_.peak_mass > 0.0 && config_.peak_mass <= 1.0)) {
    throw ConfigError("peak_mass must lie in (0, 1]");
  }
}

double PathologicalScorer::post_trap_log_prob(TokenId token) const {
  const int v = config_.vocab_size;
  const double p = config_.p_loop;
  const double q = config_.eos_share;
  const int n_other = v - 3;  // everything except BOS, EOS and the loop token
  // With no other tokens the remainder folds back into loop/EOS by renormalizing.
  const double rest = n_other > 0 ? (1.0 - p) * (1.0 - q) : 0.0;
  const double norm = n_other > 0 ? 1.0 : p + (1.0 - p) * q;
  if (token == config_.loop_token) return std::log(p / norm);
  if (token == TokenVocab::kEos) return std::log((1.0 - p) * q / norm);
  if (token == TokenVocab::kBos || n_other == 0 || rest <= 0.0) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(rest / n_other);
}

StatePtr PathologicalScorer::encode(const FeatureSequence& features) const {
  if (features.num_frames() < 1) throw InputError("empty feature sequence");
  auto s = std::make_shared<CountingState>();
  s->utterance_id = features.utterance_id;
  s->frames = features.num_frames();
  return s;
}

StepOutput PathologicalScorer::step(const StatePtr& state, TokenId prev) const {
  const CountingState& s = as_counting(state);
  if (prev < 0 || prev >= config_.vocab_size) {
    throw DomainError("invalid token id " + std::to_string(prev));
  }
  const int v = config_.vocab_size;
  const Eigen::Index stall =
      config_.stall_frame >= 0 ? std::min<Eigen::Index>(config_.stall_frame, s.frames - 1)
                               : std::max<Eigen::Index>(0, s.frames + config_.stall_frame);
  StepOutput out;
  out.logits.resize(v);
  Eigen::Index peak = stall;
  if (s.step < config_.trap_after) {
    // Forced prefix: one token dominates by 30 nats, attention sweeps toward the stall.
    out.logits.setConstant(-30.0);
    out.logits(config_.forced_tokens[s.step % config_.forced_tokens.size()]) = 0.0;
    peak = stall * s.step / config_.trap_after;
  } else {
    for (int t = 0; t < v; ++t) {
      const double lp = post_trap_log_prob(t);
      out.logits(t) = std::isfinite(lp) ? lp : -1e4;
    }
  }
  out.attention = peaked_attention(s.frames, peak, config_.peak_mass);
  auto next = std::make_shared<CountingState>(s);
  next->step = s.step + 1;
  out.next_state = std::move(next);
  return out;
}

ReplayScorer::ReplayScorer(
    int vocab_size,
    std::map<std::string, std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>> rows)
    : vocab_size_(vocab_size), rows_(std::move(rows)) {
  for (const auto& [id, steps] : rows_) {
    for (const auto& [logits, att] : steps) {
      if (logits.size() != vocab_size_) {
        throw ShapeError("replay row for '" + id + "' has wrong vocabulary size");
      }
      if (att.size() < 1) throw ShapeError("replay row for '" + id + "' has no attention");
    }
  }
}

ReplayScorer ReplayScorer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("replay log not found: " + path.string());
  std::map<std::string, std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>> rows;
  std::string line;
  long line_no = 0;
  int vocab = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto id = rec.at("utterance_id").get<std::string>();
      const auto step = rec.at("step").get<std::size_t>();
      const auto logits = rec.at("logits").get<std::vector<double>>();
      const auto att = rec.at("attention").get<std::vector<double>>();
      if (vocab < 0) vocab = static_cast<int>(logits.size());
      auto& steps = rows[id];
      if (step != steps.size()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": steps out of order");
      }
      steps.emplace_back(Eigen::Map<const Eigen::VectorXd>(logits.data(), logits.size()),
                         Eigen::Map<const Eigen::VectorXd>(att.data(), att.size()));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (vocab < 0) throw ParseError(path.string() + ": empty replay log");
  return ReplayScorer(vocab, std::move(rows));
}

StatePtr ReplayScorer::encode(const FeatureSequence& features) const {
  auto it = rows_.find(features.utterance_id);
  if (it == rows_.end()) {
    throw InputError("no replay log for utterance '" + features.utterance_id + "'");
  }
  auto s = std::make_shared<CountingState>();
  s->utterance_id = features.utterance_id;
  s->frames = it->second.front().second.size();
  return s;
}

StepOutput ReplayScorer::step(const StatePtr& state, TokenId prev) const {
  const CountingState& s = as_counting(state);
  if (prev < 0 || prev >= vocab_size_) throw DomainError("invalid token id " + std::to_string(prev));
  const auto& steps = rows_.at(s.utterance_id);
  StepOutput out;
  if (s.step < static_cast<int>(steps.size())) {
    out.logits = steps[s.step].first;
    out.attention = steps[s.step].second;
  } else {
    out.logits = Eigen::VectorXd::Constant(vocab_size_, -50.0);
    out.logits(TokenVocab::kEos) = 0.0;
    out.attention = steps.back().second;
  }
  auto next = std::make_shared<CountingState>(s);
  next->step = s.step + 1;
  out.next_state = std::move(next);
  return out;
}

}  // namespace echograph
