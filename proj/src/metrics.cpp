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

#include "echograph/metrics.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <json.hpp>

#include "echograph/error.hpp"

namespace echograph {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

double wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw InputError("WER is undefined for an empty reference");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

double char_rate(std::string_view transcript, double duration_seconds) {
  if (!(duration_seconds > 0.0)) throw InputError("duration must be positive");
  return static_cast<double>(transcript.size()) / duration_seconds;
}

bool flag_echographic(const UtteranceReport& report, int threshold_chars) {
  return report.char_count >= threshold_chars;
}

MonotonicityStats monotonicity_stats(const Eigen::MatrixXd& trace, int stall_radius) {
  if (trace.rows() < 1 || trace.cols() < 1) throw InputError("empty attention trace");
  if (stall_radius < 0) throw InputError("stall radius must be nonnegative");
  MonotonicityStats s;
  for (Eigen::Index i = 0; i < trace.rows(); ++i) {
    const double total = trace.row(i).sum();
    if (std::abs(total - 1.0) > 1e-6 || trace.row(i).minCoeff() < 0.0) {
      throw InputError("attention row " + std::to_string(i) + " is not a probability vector");
    }
    Eigen::Index peak = 0;
    for (Eigen::Index j = 1; j < trace.cols(); ++j) {
      if (trace(i, j) > trace(i, peak)) peak = j;
    }
    s.peak_positions.push_back(peak);
  }
  int run = 0;
  for (std::size_t k = 1; k < s.peak_positions.size(); ++k) {
    const Eigen::Index delta = s.peak_positions[k] - s.peak_positions[k - 1];
    if (delta < 0) ++s.backward_steps;
    else if (delta > 0) ++s.forward_steps;
    else ++s.stationary_steps;
    run = std::abs(delta) <= stall_radius ? run + 1 : 0;
    s.max_stall = std::max(s.max_stall, run);
  }
  const auto transitions = static_cast<double>(s.peak_positions.size() - 1);
  s.forward_fraction = transitions > 0 ? s.forward_steps / transitions : 0.0;
  return s;
}

CorpusReport corpus_report(std::span<const DecodedUtterance> results,
                           std::span<const ReferenceInfo> references, int threshold_chars,
                           int stall_radius) {
  std::map<std::string, const DecodedUtterance*> by_id;
  for (const auto& r : results) by_id[r.utterance_id] = &r;
  std::map<std::string, const ReferenceInfo*> refs;
  for (const auto& r : references) refs[r.utterance_id] = &r;

  std::string missing;
  for (const auto& [id, _] : by_id) {
    if (!refs.count(id)) missing += " " + id + "(no reference)";
  }
  for (const auto& [id, _] : refs) {
    if (!by_id.count(id)) missing += " " + id + "(no result)";
  }
  if (!missing.empty()) throw ReconciliationError("unmatched utterance ids:" + missing);

  CorpusReport report;
  report.summary.threshold_chars = threshold_chars;
  std::size_t total_edits = 0;
  std::size_t total_words = 0;
  double wer_sum = 0.0;
  for (const auto& [id, res] : by_id) {
    const ReferenceInfo& ref = *refs.at(id);
    UtteranceReport u;
    u.utterance_id = id;
    u.transcript = res->transcript;
    u.char_count = static_cast<int>(res->transcript.size());
    u.duration_seconds = ref.duration_seconds;
    u.chars_per_second = char_rate(res->transcript, ref.duration_seconds);
    u.echographic = flag_echographic(u, threshold_chars);
    const auto ref_words = split_words(ref.reference_text);
    if (!ref_words.empty()) {
      const auto hyp_words = split_words(res->transcript);
      const std::size_t edits = edit_distance(ref_words, hyp_words);
      u.wer = static_cast<double>(edits) / static_cast<double>(ref_words.size());
      total_edits += edits;
      total_words += ref_words.size();
      wer_sum += *u.wer;
      ++report.summary.n_scored;
    }
    if (res->attention_trace.size() > 0) u.monotonicity = monotonicity_stats(res->attention_trace, stall_radius);
    if (u.echographic) ++report.summary.n_flagged;
    report.utterances.push_back(std::move(u));
  }
  report.summary.n_utterances = static_cast<int>(report.utterances.size());
  if (report.summary.n_scored > 0) report.summary.mean_wer = wer_sum / report.summary.n_scored;
  if (total_words > 0) {
    report.summary.corpus_wer = static_cast<double>(total_edits) / static_cast<double>(total_words);
  }
  return report;
}

int scaled_threshold(std::span<const ReferenceInfo> references, double multiple) {
  std::size_t chars = 0;
  std::size_t n = 0;
  for (const auto& r : references) {
    if (r.reference_text.empty()) continue;
    chars += r.reference_text.size();
    ++n;
  }
  if (n == 0) return kDefaultEchographicThreshold;
  return static_cast<int>(std::lround(multiple * static_cast<double>(chars) / static_cast<double>(n)));
}

void write_report_csv(const std::filesystem::path& path, const CorpusReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "utterance_id,seconds,chars,chars_per_sec,flagged,wer,backward_steps,max_stall,forward_fraction\n";
  char buf[256];
  for (const auto& u : report.utterances) {
    std::string wer_field = u.wer ? "" : "NA";
    if (u.wer) {
      std::snprintf(buf, sizeof(buf), "%.6f", *u.wer);
      wer_field = buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,%.3f,%d,%.4f,%d,%s,%d,%d,%.6f\n", u.utterance_id.c_str(),
                  u.duration_seconds, u.char_count, u.chars_per_second, u.echographic ? 1 : 0,
                  wer_field.c_str(), u.monotonicity.backward_steps, u.monotonicity.max_stall,
                  u.monotonicity.forward_fraction);
    out << buf;
  }
}

void write_summary_json(const std::filesystem::path& path, const ReportSummary& s) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  nlohmann::ordered_json j = {{"n_utterances", s.n_utterances}, {"n_flagged", s.n_flagged},
                              {"n_scored", s.n_scored},         {"mean_wer", s.mean_wer},
                              {"corpus_wer", s.corpus_wer},     {"threshold_chars", s.threshold_chars}};
  out << j.dump(2) << '\n';
}

}  // namespace echograph
