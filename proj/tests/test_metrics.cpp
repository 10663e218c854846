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

#include <algorithm>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "echograph/decode.hpp"
#include "echograph/error.hpp"
#include "echograph/metrics.hpp"
#include "echograph/scorer.hpp"
#include "test_util.hpp"

using namespace echograph;
using echograph::testing::TempDir;

namespace {

// Plain recursion over the last operation, no table.
std::size_t brute_distance(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                           std::size_t j) {
  if (i == 0) return j;
  if (j == 0) return i;
  const std::size_t sub = brute_distance(a, i - 1, b, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
  const std::size_t del = brute_distance(a, i - 1, b, j) + 1;
  const std::size_t ins = brute_distance(a, i, b, j - 1) + 1;
  return std::min({sub, del, ins});
}

std::vector<std::vector<std::string>> all_sequences(int max_len) {
  std::vector<std::vector<std::string>> out = {{}};
  for (std::size_t start = 0; start < out.size(); ++start) {
    if (static_cast<int>(out[start].size()) == max_len) continue;
    for (const char* w : {"HU", "HM"}) {
      auto next = out[start];
      next.push_back(w);
      out.push_back(next);
    }
  }
  return out;
}

Eigen::MatrixXd one_hot_trace(const std::vector<Eigen::Index>& peaks, Eigen::Index frames) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(peaks.size()), frames);
  for (std::size_t i = 0; i < peaks.size(); ++i) t(static_cast<Eigen::Index>(i), peaks[i]) = 1.0;
  return t;
}

}  // namespace

TEST_CASE("WER equals brute-force edit distance on all short word sequences") {
  const auto seqs = all_sequences(6);
  REQUIRE(seqs.size() == 127);
  for (const auto& ref : seqs) {
    for (const auto& hyp : seqs) {
      const std::size_t oracle = brute_distance(ref, ref.size(), hyp, hyp.size());
      REQUIRE(edit_distance(ref, hyp) == oracle);
      if (!ref.empty()) {
        REQUIRE(wer(ref, hyp) * static_cast<double>(ref.size()) == doctest::Approx(static_cast<double>(oracle)));
      }
    }
  }
}

TEST_CASE("WER examples") {
  CHECK(wer(split_words("the cat sat"), split_words("the cat sat")) == 0.0);
  CHECK(wer(split_words("the cat sat"), split_words("the bat sat")) == doctest::Approx(1.0 / 3.0));
  CHECK(wer(split_words("a b"), split_words("a b c d")) == doctest::Approx(1.0));
  CHECK(wer(split_words("a b c d"), split_words("")) == doctest::Approx(1.0));
  CHECK(wer(split_words("Hu  hm"), split_words("HU HM")) == 0.0);
  CHECK_THROWS_AS(wer({}, split_words("x")), InputError);
  CHECK(split_words("  ab\tcd \n") == std::vector<std::string>{"AB", "CD"});
}

TEST_CASE("character rate and the echographic flag") {
  CHECK(std::abs(char_rate(std::string(230, 'x'), 13.3) - 17.3) <= 0.05);
  CHECK_THROWS_AS(char_rate("abc", 0.0), InputError);
  UtteranceReport r;
  r.char_count = 199;
  CHECK_FALSE(flag_echographic(r));
  r.char_count = 200;
  CHECK(flag_echographic(r));
  r.char_count = 230;
  CHECK(flag_echographic(r));
  CHECK_FALSE(flag_echographic(r, 231));
}

TEST_CASE("monotonicity of hand-built traces") {
  const MonotonicityStats diag = monotonicity_stats(one_hot_trace({0, 1, 2, 3, 4}, 5));
  CHECK(diag.backward_steps == 0);
  CHECK(diag.forward_steps == 4);
  CHECK(diag.forward_fraction == 1.0);
  CHECK(diag.max_stall == 4);
  CHECK(monotonicity_stats(one_hot_trace({0, 1, 2, 3, 4}, 5), 0).max_stall == 0);

  const MonotonicityStats mixed = monotonicity_stats(one_hot_trace({0, 3, 3, 3, 1, 4}, 6));
  CHECK(mixed.peak_positions == std::vector<Eigen::Index>{0, 3, 3, 3, 1, 4});
  CHECK(mixed.backward_steps == 1);
  CHECK(mixed.forward_steps == 2);
  CHECK(mixed.stationary_steps == 2);
  CHECK(mixed.max_stall == 2);
  CHECK(mixed.forward_fraction == doctest::Approx(0.4));

  Eigen::MatrixXd tie(1, 3);
  tie << 0.4, 0.4, 0.2;
  CHECK(monotonicity_stats(tie).peak_positions == std::vector<Eigen::Index>{0});
  CHECK(monotonicity_stats(tie).max_stall == 0);

  CHECK_THROWS_AS(monotonicity_stats(Eigen::MatrixXd(0, 3)), InputError);
  Eigen::MatrixXd bad(1, 2);
  bad << 0.5, 0.6;
  CHECK_THROWS_AS(monotonicity_stats(bad), InputError);
}

TEST_CASE("the pathological trace is one long stall") {
  PathologicalConfig pc;
  pc.trap_after = 0;
  const PathologicalScorer scorer(pc);
  DecoderConfig config;
  config.lm_weight = 0.0;
  config.alpha = 1.0;
  config.max_output_tokens = 60;
  const DecodeResult r = beam_search(scorer, nullptr, echograph::testing::dummy_features(30), config);
  const Eigen::Index steps = r.best.attention_trace.rows();
  REQUIRE(steps == 60);
  const MonotonicityStats s = monotonicity_stats(r.best.attention_trace);
  CHECK(s.max_stall == steps - 1);
  CHECK(s.backward_steps == 0);
  for (Eigen::Index p : s.peak_positions) CHECK(p == 29);
}

namespace {

std::vector<DecodedUtterance> decode_all(const Scorer& scorer, int n, int max_tokens) {
  DecoderConfig config;
  config.lm_weight = 0.0;
  config.max_output_tokens = max_tokens;
  std::vector<DecodedUtterance> out;
  for (int i = 0; i < n; ++i) {
    const std::string id = "u" + std::to_string(i);
    const DecodeResult r = beam_search(scorer, nullptr, echograph::testing::dummy_features(8 + i, id), config);
    out.push_back({id, r.transcript, r.best.attention_trace});
  }
  return out;
}

std::vector<ReferenceInfo> refs_for(int n, const std::string& text) {
  std::vector<ReferenceInfo> refs;
  for (int i = 0; i < n; ++i) refs.push_back({"u" + std::to_string(i), text, 10.0});
  return refs;
}

}  // namespace

TEST_CASE("corpus report over looping and clean output") {
  const PathologicalScorer looping(PathologicalConfig{});
  const auto decoded = decode_all(looping, 10, 150);
  const auto refs = refs_for(10, "KA HU");
  const CorpusReport report = corpus_report(decoded, refs, kDefaultEchographicThreshold);
  CHECK(report.summary.n_utterances == 10);
  CHECK(report.summary.n_flagged == 10);
  CHECK(report.summary.n_scored == 10);
  CHECK(report.summary.corpus_wer > 10.0);
  for (const UtteranceReport& u : report.utterances) {
    CHECK(u.echographic);
    CHECK(u.chars_per_second == doctest::Approx(u.char_count / 10.0));
    CHECK(u.monotonicity.max_stall >= 140);
  }

  std::vector<DecodedUtterance> exact;
  for (const ReferenceInfo& r : refs) exact.push_back({r.utterance_id, r.reference_text, Eigen::MatrixXd()});
  const CorpusReport clean = corpus_report(exact, refs, kDefaultEchographicThreshold);
  CHECK(clean.summary.n_flagged == 0);
  CHECK(clean.summary.corpus_wer == 0.0);
  CHECK(clean.summary.mean_wer == 0.0);
}

TEST_CASE("corpus report invariants") {
  const PathologicalScorer looping(PathologicalConfig{});
  auto decoded = decode_all(looping, 6, 80);
  auto refs = refs_for(6, "HU HU");
  refs[2].reference_text.clear();
  const CorpusReport base = corpus_report(decoded, refs, 100);
  CHECK(base.summary.n_scored == 5);
  CHECK_FALSE(base.utterances[2].wer.has_value());

  std::reverse(decoded.begin(), decoded.end());
  std::rotate(refs.begin(), refs.begin() + 2, refs.end());
  const CorpusReport shuffled = corpus_report(decoded, refs, 100);
  CHECK(shuffled.summary.corpus_wer == base.summary.corpus_wer);
  CHECK(shuffled.summary.n_flagged == base.summary.n_flagged);
  for (std::size_t i = 0; i < base.utterances.size(); ++i) {
    CHECK(shuffled.utterances[i].utterance_id == base.utterances[i].utterance_id);
  }

  int previous = 1 << 30;
  for (int threshold : {0, 50, 100, 200, 240, 300, 1000}) {
    const int flagged = corpus_report(decoded, refs, threshold).summary.n_flagged;
    CHECK(flagged <= previous);
    previous = flagged;
  }

  auto missing = refs;
  missing.pop_back();
  missing.push_back({"stranger", "HU", 3.0});
  try {
    corpus_report(decoded, missing, 100);
    FAIL("expected ReconciliationError");
  } catch (const ReconciliationError& e) {
    CHECK(std::string(e.what()).find("stranger") != std::string::npos);
  }
}

TEST_CASE("thresholds scale with reference length") {
  const std::vector<ReferenceInfo> refs = {{"a", "HU HM", 1.0}, {"b", "HU HM KA", 1.0}, {"c", "", 1.0}};
  CHECK(scaled_threshold(refs) == 26);
  CHECK(scaled_threshold(std::vector<ReferenceInfo>{{"c", "", 1.0}}) == kDefaultEchographicThreshold);
}

TEST_CASE("report files") {
  TempDir dir;
  const auto refs = refs_for(2, "HU");
  const std::vector<DecodedUtterance> decoded = {{"u0", "HU", Eigen::MatrixXd()}, {"u1", "HM HM", Eigen::MatrixXd()}};
  const CorpusReport report = corpus_report(decoded, refs, 200);
  write_report_csv(dir.path() / "r.csv", report);
  write_summary_json(dir.path() / "s.json", report.summary);
  std::ifstream csv(dir.path() / "r.csv");
  std::string header, line;
  std::getline(csv, header);
  CHECK(header == "utterance_id,seconds,chars,chars_per_sec,flagged,wer,backward_steps,max_stall,forward_fraction");
  std::getline(csv, line);
  CHECK(line.rfind("u0,10.000,2,0.2000,0,0.000000,", 0) == 0);
  const auto j = nlohmann::json::parse(std::ifstream(dir.path() / "s.json"));
  CHECK(j["n_utterances"] == 2);
  CHECK(j["corpus_wer"].get<double>() == doctest::Approx(1.0));
}
