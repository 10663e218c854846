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

#include "echograph/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "echograph/error.hpp"

namespace echograph {

void DecoderConfig::validate() const {
  if (beam_width < 1) throw ConfigError("beam width must be >= 1");
  if (!(k >= 0.0)) throw ConfigError("length normalization K must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(lm_weight >= 0.0)) throw ConfigError("LM weight must be >= 0");
  if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
}

double length_penalty(int length, double k, double alpha) {
  if (!(k >= 0.0) || !(alpha >= 0.0 && alpha <= 1.0) || length < 0) {
    throw DomainError("length penalty needs K >= 0, 0 <= alpha <= 1, length >= 0");
  }
  return std::pow(k + length, alpha) / std::pow(k + 1.0, alpha);
}

Eigen::VectorXd fused_step_scores(const Eigen::VectorXd& am_logits, const Eigen::VectorXd& lm_log_probs,
                                  double lm_weight) {
  const double mx = am_logits.maxCoeff();
  const double lse = mx + std::log((am_logits.array() - mx).exp().sum());
  Eigen::VectorXd out = (am_logits.array() - lse).matrix();
  if (lm_log_probs.size() > 0) {
    if (lm_log_probs.size() != am_logits.size()) {
      throw ShapeError("language model and acoustic model vocabularies differ");
    }
    out += lm_weight * lm_log_probs;
  }
  return out;
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.normalized_score != b.normalized_score) return a.normalized_score > b.normalized_score;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

namespace {

struct Active {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  std::vector<Eigen::VectorXd> attention;
  StatePtr am_state;
  StatePtr lm_state;
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double log_prob;
  double score;
};

Hypothesis to_hypothesis(const Active& a, double score, bool finished) {
  Hypothesis h;
  h.tokens = a.tokens;
  h.log_prob = a.log_prob;
  h.normalized_score = score;
  h.finished = finished;
  if (!a.attention.empty()) {
    h.attention_trace.resize(static_cast<Eigen::Index>(a.attention.size()), a.attention.front().size());
    for (std::size_t r = 0; r < a.attention.size(); ++r) {
      h.attention_trace.row(static_cast<Eigen::Index>(r)) = a.attention[r].transpose();
    }
  }
  return h;
}

void keep_best(std::vector<Hypothesis>& pool, std::size_t limit) {
  std::stable_sort(pool.begin(), pool.end(), ranks_before);
  if (pool.size() > limit) pool.resize(limit);
}

}  // namespace

DecodeResult beam_search(const Scorer& scorer, const LanguageModel* lm, const FeatureSequence& features,
                         const DecoderConfig& config) {
  config.validate();
  if (features.num_frames() < 1 || features.dim() < 1) {
    throw InputError("cannot decode an empty feature sequence '" + features.utterance_id + "'");
  }
  const int vocab = scorer.vocab_size();
  const bool use_lm = lm != nullptr && config.lm_weight > 0.0;
  if (use_lm && lm->vocab_size() != vocab) {
    throw ShapeError("language model and scorer vocabularies differ");
  }
  const auto beam = static_cast<std::size_t>(config.beam_width);

  std::vector<Active> active(1);
  active[0].am_state = scorer.encode(features);
  if (use_lm) active[0].lm_state = lm->start();

  std::vector<Hypothesis> finished;
  std::vector<Hypothesis> capped;
  while (!active.empty()) {
    const int length = static_cast<int>(active.front().tokens.size()) + 1;
    const double lp = length_penalty(length, config.k, config.alpha);
    std::vector<StepOutput> outputs(active.size());
    std::vector<StatePtr> lm_next(active.size());
    std::vector<Candidate> candidates;
    candidates.reserve(active.size() * static_cast<std::size_t>(vocab));
    for (std::size_t i = 0; i < active.size(); ++i) {
      const TokenId prev = active[i].tokens.empty() ? TokenVocab::kBos : active[i].tokens.back();
      outputs[i] = scorer.step(active[i].am_state, prev);
      if (outputs[i].logits.size() != vocab) throw ShapeError("scorer returned wrong number of logits");
      if (outputs[i].logits.hasNaN()) throw InputError("scorer returned NaN logits");
      Eigen::VectorXd lm_lp;
      if (use_lm) {
        LmStep ls = lm->step(active[i].lm_state, prev);
        lm_lp = std::move(ls.log_probs);
        lm_next[i] = std::move(ls.next_state);
      }
      const Eigen::VectorXd fused = fused_step_scores(outputs[i].logits, lm_lp, config.lm_weight);
      for (TokenId v = 0; v < vocab; ++v) {
        if (v == TokenVocab::kBos) continue;
        const double total = active[i].log_prob + fused(v);
        candidates.push_back({i, v, total, total / lp});
      }
    }
    // Every candidate has the same length, so ties fall to lexicographic order.
    std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      const auto& ta = active[a.parent].tokens;
      const auto& tb = active[b.parent].tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    });

    auto extend = [&](const Candidate& c) {
      Active next;
      next.tokens = active[c.parent].tokens;
      next.tokens.push_back(c.token);
      next.log_prob = c.log_prob;
      next.attention = active[c.parent].attention;
      next.attention.push_back(outputs[c.parent].attention);
      next.am_state = outputs[c.parent].next_state;
      next.lm_state = use_lm ? lm_next[c.parent] : nullptr;
      return next;
    };

    bool any_open_in_top = false;
    for (std::size_t r = 0; r < std::min(beam, candidates.size()); ++r) {
      if (candidates[r].token == TokenVocab::kEos) {
        finished.push_back(to_hypothesis(extend(candidates[r]), candidates[r].score, true));
      } else {
        any_open_in_top = true;
      }
    }
    keep_best(finished, beam);

    std::vector<Active> next_active;
    if (any_open_in_top) {
      std::vector<double> scores;
      for (const Candidate& c : candidates) {
        if (next_active.size() == beam) break;
        if (c.token == TokenVocab::kEos) continue;
        next_active.push_back(extend(c));
        scores.push_back(c.score);
      }
      if (length >= config.max_output_tokens) {
        for (std::size_t i = 0; i < next_active.size(); ++i) {
          capped.push_back(to_hypothesis(next_active[i], scores[i], false));
        }
        next_active.clear();
      }
    }
    active = std::move(next_active);
  }

  std::vector<Hypothesis> pool = finished.empty() ? std::move(capped) : std::move(finished);
  keep_best(pool, beam);
  if (pool.empty()) throw InputError("no hypothesis survived decoding '" + features.utterance_id + "'");

  DecodeResult result;
  result.utterance_id = features.utterance_id;
  result.best = pool.front();
  result.n_best = std::move(pool);
  const TokenVocab vocab_table(vocab);
  result.transcript = vocab_table.detokenize(result.best.tokens);
  result.char_count = static_cast<int>(result.transcript.size());
  result.vocab_size = vocab;
  return result;
}

std::string decode_result_json(const DecodeResult& result, const std::string& attention_csv) {
  nlohmann::ordered_json n_best = nlohmann::ordered_json::array();
  for (const Hypothesis& h : result.n_best) {
    n_best.push_back({{"normalized_score", h.normalized_score},
                      {"log_prob", h.log_prob},
                      {"length", h.tokens.size()},
                      {"finished", h.finished}});
  }
  nlohmann::ordered_json j = {{"utterance_id", result.utterance_id},
                              {"tokens", result.best.tokens},
                              {"transcript", result.transcript},
                              {"char_count", result.char_count},
                              {"log_prob", result.best.log_prob},
                              {"normalized_score", result.best.normalized_score},
                              {"finished", result.best.finished},
                              {"n_best", n_best}};
  j["attention_csv"] = attention_csv.empty() ? nlohmann::ordered_json(nullptr)
                                             : nlohmann::ordered_json(attention_csv);
  return j.dump();
}

void write_attention_csv(const std::filesystem::path& path, const Eigen::MatrixXd& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# attention weights: rows = output steps (EOS included), columns = encoder frames\n";
  char buf[32];
  for (Eigen::Index i = 0; i < trace.rows(); ++i) {
    for (Eigen::Index j = 0; j < trace.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", trace(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_attention_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("attention file not found: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace echograph
