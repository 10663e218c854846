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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <optional>
#include <vector>

#include "echograph/decode.hpp"
#include "echograph/error.hpp"
#include "echograph/metrics.hpp"
#include "echograph/scorer.hpp"
#include "test_util.hpp"

using namespace echograph;
using echograph::testing::dummy_features;
using echograph::testing::for_each_content_sequence;
using echograph::testing::RandomTableLm;
using echograph::testing::RandomTableScorer;
using echograph::testing::TempDir;

namespace {

Eigen::VectorXd log_softmax(const Eigen::VectorXd& x) {
  const double mx = x.maxCoeff();
  return (x.array() - mx - std::log((x.array() - mx).exp().sum())).matrix();
}

/// Fused log score of `tokens` (EOS-terminated) under a scorer and optional LM, by direct stepping.
double sequence_score(const Scorer& scorer, const LanguageModel* lm, double lm_weight,
                      const FeatureSequence& f, const std::vector<TokenId>& tokens) {
  StatePtr s = scorer.encode(f);
  StatePtr ls = lm ? lm->start() : nullptr;
  TokenId prev = TokenVocab::kBos;
  double total = 0.0;
  for (TokenId t : tokens) {
    const StepOutput out = scorer.step(s, prev);
    total += log_softmax(out.logits)(t);
    if (lm) {
      const LmStep step = lm->step(ls, prev);
      total += lm_weight * step.log_probs(t);
      ls = step.next_state;
    }
    s = out.next_state;
    prev = t;
  }
  return total;
}

/// Best EOS-terminated sequence of at most max_len tokens, ranked like the decoder.
Hypothesis exhaustive_best(const Scorer& scorer, const LanguageModel* lm, const FeatureSequence& f,
                           const DecoderConfig& config) {
  std::optional<Hypothesis> best;
  for_each_content_sequence(scorer.vocab_size(), config.max_output_tokens - 1, [&](const std::vector<TokenId>& content) {
    Hypothesis h;
    h.tokens = content;
    h.tokens.push_back(TokenVocab::kEos);
    h.log_prob = sequence_score(scorer, lm, config.lm_weight, f, h.tokens);
    h.normalized_score =
        h.log_prob / length_penalty(static_cast<int>(h.tokens.size()), config.k, config.alpha);
    if (!best || ranks_before(h, *best)) best = h;
  });
  return *best;
}

std::vector<TokenId> greedy(const Scorer& scorer, const LanguageModel* lm, const FeatureSequence& f,
                            const DecoderConfig& config) {
  StatePtr s = scorer.encode(f);
  StatePtr ls = lm ? lm->start() : nullptr;
  TokenId prev = TokenVocab::kBos;
  std::vector<TokenId> out;
  while (static_cast<int>(out.size()) < config.max_output_tokens) {
    const StepOutput step = scorer.step(s, prev);
    Eigen::VectorXd fused = log_softmax(step.logits);
    if (lm) {
      const LmStep l = lm->step(ls, prev);
      fused += config.lm_weight * l.log_probs;
      ls = l.next_state;
    }
    fused(TokenVocab::kBos) = -std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    fused.maxCoeff(&arg);
    out.push_back(static_cast<TokenId>(arg));
    if (arg == TokenVocab::kEos) break;
    s = step.next_state;
    prev = static_cast<TokenId>(arg);
  }
  return out;
}

}  // namespace

TEST_CASE("length penalty values") {
  CHECK(std::abs(length_penalty(5, 5.0, 1.0) - 10.0 / 6.0) <= 1e-12);
  for (int len : {1, 2, 7, 150}) CHECK(length_penalty(len, 5.0, 0.0) == 1.0);
  for (double alpha : {0.0, 0.3, 0.7, 1.0}) {
    for (double k : {0.0, 1.0, 5.0}) CHECK(std::abs(length_penalty(1, k, alpha) - 1.0) <= 1e-12);
  }
  CHECK(length_penalty(3, 0.0, 0.5) == doctest::Approx(std::sqrt(3.0)));
  for (double alpha : {0.2, 0.6, 1.0}) {
    for (int len = 1; len < 50; ++len) CHECK(length_penalty(len + 1, 5.0, alpha) > length_penalty(len, 5.0, alpha));
  }
  CHECK_THROWS_AS(length_penalty(3, 5.0, 1.5), DomainError);
  CHECK_THROWS_AS(length_penalty(3, -1.0, 0.5), DomainError);
}

TEST_CASE("decoder config validation") {
  DecoderConfig c;
  CHECK_NOTHROW(c.validate());
  c.beam_width = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.alpha = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.max_output_tokens = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.lm_weight = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("fused step scores") {
  Eigen::VectorXd am(3);
  am << 1.0, 2.0, 3.0;
  Eigen::VectorXd lm(3);
  lm << std::log(0.2), std::log(0.3), std::log(0.5);
  const Eigen::VectorXd fused = fused_step_scores(am, lm, 0.25);
  CHECK(fused(0) == doctest::Approx(-2.809965442552905).epsilon(1e-12));
  CHECK(fused(1) == doctest::Approx(-1.708599165525864).epsilon(1e-12));
  CHECK(fused(2) == doctest::Approx(-0.5808927595843665).epsilon(1e-12));

  const Eigen::VectorXd plain = fused_step_scores(am, Eigen::VectorXd(), 0.25);
  CHECK(std::log(plain.array().exp().sum()) == doctest::Approx(0.0));

  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd logits(6);
    for (Eigen::Index i = 0; i < 6; ++i) logits(i) = normal(rng);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(6, -std::log(6.0));
    Eigen::Index a = 0, b = 0;
    logits.maxCoeff(&a);
    fused_step_scores(logits, uniform, 1.0).maxCoeff(&b);
    CHECK(a == b);
  }
}

TEST_CASE("exhaustive beam equals brute force and beam 1 equals greedy") {
  const FeatureSequence f = dummy_features();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const RandomTableScorer scorer(4, seed);
    const RandomTableLm lm(4, seed * 31);
    DecoderConfig config;
    config.max_output_tokens = 5;
    config.k = static_cast<double>(seed % 6);
    config.alpha = 0.5 * static_cast<double>(seed % 3);
    config.lm_weight = seed % 2 == 0 ? 0.25 : 0.0;
    const LanguageModel* lm_ptr = config.lm_weight > 0.0 ? &lm : nullptr;
    INFO("seed " << seed);

    config.beam_width = 243;
    const DecodeResult exact = beam_search(scorer, lm_ptr, f, config);
    const Hypothesis oracle = exhaustive_best(scorer, lm_ptr, f, config);
    CHECK(exact.best.tokens == oracle.tokens);
    CHECK(exact.best.normalized_score == doctest::Approx(oracle.normalized_score).epsilon(1e-12));

    config.beam_width = 1;
    const DecodeResult one = beam_search(scorer, lm_ptr, f, config);
    CHECK(one.best.tokens == greedy(scorer, lm_ptr, f, config));
  }
}

TEST_CASE("beam search is deterministic and records one attention row per token") {
  const RandomTableScorer scorer(10, 77, 1.0);
  const RandomTableLm lm(10, 5);
  const FeatureSequence f = dummy_features(9);
  DecoderConfig config;
  config.max_output_tokens = 12;
  const DecodeResult a = beam_search(scorer, &lm, f, config);
  const DecodeResult b = beam_search(scorer, &lm, f, config);
  CHECK(a.best.tokens == b.best.tokens);
  CHECK(a.best.log_prob == b.best.log_prob);
  CHECK(a.best.attention_trace == b.best.attention_trace);
  CHECK(a.best.attention_trace.rows() == static_cast<Eigen::Index>(a.best.tokens.size()));
  CHECK(a.best.attention_trace.cols() == 9);
  for (Eigen::Index r = 0; r < a.best.attention_trace.rows(); ++r) {
    CHECK(a.best.attention_trace.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t i = 1; i < a.n_best.size(); ++i) CHECK_FALSE(ranks_before(a.n_best[i], a.n_best[i - 1]));
  CHECK(a.transcript == TokenVocab(10).detokenize(a.best.tokens));
  CHECK(a.char_count == static_cast<int>(a.transcript.size()));

  const UniformLm wrong(7);
  CHECK_THROWS_AS(beam_search(scorer, &wrong, f, config), ShapeError);
  FeatureSequence empty = f;
  empty.frames.resize(0, 2);
  CHECK_THROWS_AS(beam_search(scorer, nullptr, empty, config), InputError);
}

TEST_CASE("pathological scorer loops to the cap at alpha 1 and stops early at alpha 0") {
  const PathologicalScorer scorer(PathologicalConfig{});
  const FeatureSequence f = dummy_features(40, "loop");
  DecoderConfig config;
  config.k = 5.0;
  config.lm_weight = 0.0;

  config.alpha = 1.0;
  const DecodeResult looped = beam_search(scorer, nullptr, f, config);
  CHECK(looped.best.tokens.size() == 150);
  UtteranceReport report;
  report.char_count = looped.char_count;
  CHECK(flag_echographic(report));

  config.alpha = 0.0;
  const DecodeResult early = beam_search(scorer, nullptr, f, config);
  CHECK(early.best.tokens.size() <= 3);
  CHECK(early.best.tokens.back() == TokenVocab::kEos);
  report.char_count = early.char_count;
  CHECK_FALSE(flag_echographic(report));
}

TEST_CASE("exhaustive scoring at max length 8 confirms the length-normalization crossover") {
  PathologicalConfig pc;
  pc.vocab_size = 5;
  const PathologicalScorer scorer(pc);
  const FeatureSequence f = dummy_features(10, "small");
  DecoderConfig config;
  config.max_output_tokens = 8;
  config.lm_weight = 0.0;
  config.beam_width = 4;

  std::size_t previous = 9;
  for (double alpha : {1.0, 0.8, 0.6, 0.4, 0.2, 0.0}) {
    config.alpha = alpha;
    const Hypothesis oracle = exhaustive_best(scorer, nullptr, f, config);
    INFO("alpha " << alpha);
    CHECK(oracle.tokens.size() <= previous);
    previous = oracle.tokens.size();
    CHECK(beam_search(scorer, nullptr, f, config).best.tokens == oracle.tokens);
    if (alpha == 1.0) CHECK(oracle.tokens.size() == 8);
    if (alpha == 0.0) {
      CHECK(oracle.tokens == std::vector<TokenId>{4, 3, TokenVocab::kEos});
      CHECK(oracle.log_prob == doctest::Approx(std::log(0.09)).epsilon(1e-9));
    }
  }
}

TEST_CASE("attention traces round-trip through CSV") {
  TempDir dir;
  Eigen::MatrixXd trace(3, 4);
  trace << 0.1, 0.2, 0.3, 0.4, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  write_attention_csv(dir.path() / "t.csv", trace);
  const Eigen::MatrixXd back = read_attention_csv(dir.path() / "t.csv");
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK((back - trace).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("replay scorer follows logged rows and forces EOS afterwards") {
  auto row = [](TokenId hot) {
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(6);
    logits(hot) = 5.0;
    Eigen::VectorXd attention(2);
    attention << 0.5, 0.5;
    return std::make_pair(logits, attention);
  };
  std::map<std::string, std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>> rows;
  rows["r1"] = {row(2), row(3), row(3)};
  const ReplayScorer scorer(6, rows);
  DecoderConfig config;
  config.beam_width = 1;
  config.lm_weight = 0.0;
  const DecodeResult r = beam_search(scorer, nullptr, dummy_features(2, "r1"), config);
  CHECK(r.best.tokens == std::vector<TokenId>{2, 3, 3, TokenVocab::kEos});

  TempDir dir;
  {
    std::ofstream out(dir.path() / "log.jsonl");
    for (int step = 0; step < 3; ++step) {
      nlohmann::json j;
      j["utterance_id"] = "r1";
      j["step"] = step;
      const auto& [l, a] = rows["r1"][step];
      j["logits"] = std::vector<double>(l.data(), l.data() + l.size());
      j["attention"] = std::vector<double>(a.data(), a.data() + a.size());
      out << j.dump() << '\n';
    }
  }
  const ReplayScorer loaded = ReplayScorer::from_file(dir.path() / "log.jsonl");
  CHECK(beam_search(loaded, nullptr, dummy_features(2, "r1"), config).best.tokens == r.best.tokens);
}

TEST_CASE("decode results serialize to JSON") {
  const PathologicalScorer scorer(PathologicalConfig{});
  DecoderConfig config;
  config.max_output_tokens = 10;
  config.lm_weight = 0.0;
  const DecodeResult r = beam_search(scorer, nullptr, dummy_features(5, "j"), config);
  const auto j = nlohmann::json::parse(decode_result_json(r, "att/j.csv"));
  CHECK(j["utterance_id"] == "j");
  CHECK(j["tokens"].get<std::vector<int>>() == r.best.tokens);
  CHECK(j["transcript"] == r.transcript);
  CHECK(j["char_count"] == r.char_count);
  CHECK(j["n_best"].size() == r.n_best.size());
}
