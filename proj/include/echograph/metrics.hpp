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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace echograph {

/// Levenshtein distance with unit substitution, insertion and deletion costs.
template <typename T>
std::size_t edit_distance(std::span<const T> ref, std::span<const T> hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1);
  std::vector<std::size_t> cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

template <typename T>
std::size_t edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp) {
  return edit_distance(std::span<const T>(ref), std::span<const T>(hyp));
}

/// Whitespace-separated, uppercased words.
std::vector<std::string> split_words(std::string_view text);

/// Word error rate: minimal edits / |reference|. Throws InputError on an empty reference.
double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

/// Characters per second. Throws InputError when duration <= 0.
double char_rate(std::string_view transcript, double duration_seconds);

inline constexpr int kDefaultEchographicThreshold = 200;

struct MonotonicityStats {
  std::vector<Eigen::Index> peak_positions;
  int backward_steps = 0;
  int forward_steps = 0;
  int stationary_steps = 0;  // peak unchanged
  /// Longest run of consecutive transitions with |delta peak| <= stall radius.
  int max_stall = 0;
  double forward_fraction = 0.0;
};

/// Argmax ties go to the smaller frame index. Throws InputError on an empty
/// trace or a row that is not a probability vector (tolerance 1e-6).
MonotonicityStats monotonicity_stats(const Eigen::MatrixXd& attention_trace, int stall_radius = 1);

struct UtteranceReport {
  std::string utterance_id;
  std::string transcript;
  int char_count = 0;
  double duration_seconds = 0.0;
  double chars_per_second = 0.0;
  bool echographic = false;
  std::optional<double> wer;
  MonotonicityStats monotonicity;
};

/// char_count >= threshold_chars.
bool flag_echographic(const UtteranceReport& report, int threshold_chars = kDefaultEchographicThreshold);

/// One decoded utterance as seen by the report builder.
struct DecodedUtterance {
  std::string utterance_id;
  std::string transcript;
  Eigen::MatrixXd attention_trace;  // may be empty
};

struct ReferenceInfo {
  std::string utterance_id;
  std::string reference_text;  // empty means unlabeled
  double duration_seconds = 0.0;
};

struct ReportSummary {
  int n_utterances = 0;
  int n_flagged = 0;
  int n_scored = 0;
  double mean_wer = 0.0;    // mean utterance WER
  double corpus_wer = 0.0;  // total edits / total reference words
  int threshold_chars = kDefaultEchographicThreshold;
};

struct CorpusReport {
  std::vector<UtteranceReport> utterances;  // sorted by utterance_id
  ReportSummary summary;
};

/// Joins decode results with references by utterance id. Throws
/// ReconciliationError listing ids present on only one side.
CorpusReport corpus_report(std::span<const DecodedUtterance> results,
                           std::span<const ReferenceInfo> references, int threshold_chars,
                           int stall_radius = 1);

/// Default desk-scale threshold: 4x the mean reference character length.
int scaled_threshold(std::span<const ReferenceInfo> references, double multiple = 4.0);

/// CSV with header utterance_id,seconds,chars,chars_per_sec,flagged,wer,
/// backward_steps,max_stall,forward_fraction.
void write_report_csv(const std::filesystem::path& path, const CorpusReport& report);
void write_summary_json(const std::filesystem::path& path, const ReportSummary& summary);

}  // namespace echograph
