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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "echograph/corpus.hpp"
#include "echograph/decode.hpp"
#include "echograph/lenpred.hpp"
#include "echograph/metrics.hpp"

namespace echograph {

struct TruncationPolicy {
  double eta = 1.3;
  void validate() const;  // ConfigError unless eta >= 1
};

enum class SweepAxis { kAlpha, kEta, kBeam, kLmWeight };

/// Accepts "alpha", "eta", "beam" and "lm_weight" (or "lm-weight"). Throws UsageError otherwise.
SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepGrids {
  std::vector<double> alpha = {1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
  std::vector<double> eta = {1.0, 1.1, 1.2, 1.3};
  std::vector<double> beam = {1, 2, 4, 8, 16};
  std::vector<double> lm_weight = {0.0, 0.125, 0.25, 0.375};

  const std::vector<double>& values(SweepAxis axis) const;
  /// ConfigError on an empty grid or a value outside its domain.
  void validate() const;
};

struct LengthPrediction {
  double lambda = 0.0;
  long n_hat = 0;
};

/// A decoded utterance, optionally truncated by the length predictor.
struct DecodedOutput {
  DecodeResult result;
  std::optional<LengthPrediction> prediction;
  bool truncated = false;
};

struct DecodeSetup {
  const Scorer* scorer = nullptr;
  const LanguageModel* lm = nullptr;
  const LengthPredictor* length_predictor = nullptr;
  DecoderConfig decoder;
  std::optional<TruncationPolicy> truncation;
  /// 0 selects the number of hardware threads.
  int workers = 0;
};

/// Rewrites the best hypothesis to its truncated form and refreshes the
/// transcript. The attention trace keeps one row per remaining token.
/// Returns true when tokens were removed.
bool apply_truncation(DecodeResult& result, long n_hat, double eta);

/// Decodes every utterance on a bounded worker pool. The returned list is in
/// utterance-id order regardless of scheduling. When the setup has a length
/// predictor, each output carries its prediction; truncation is applied only
/// when setup.truncation is set.
std::vector<DecodedOutput> decode_corpus(const Corpus& corpus, const DecodeSetup& setup);

std::vector<DecodedUtterance> as_decoded_utterances(const std::vector<DecodedOutput>& outputs);
std::vector<ReferenceInfo> reference_infos(const Corpus& corpus);

struct SweepRow {
  double value = 0.0;
  int flagged_count = 0;
  std::optional<double> in_domain_wer;      // percent
  std::optional<double> out_of_domain_wer;  // percent
};

struct SweepSetup {
  const Corpus* in_domain = nullptr;
  const Corpus* out_of_domain = nullptr;
  DecodeSetup decode;
  int threshold_chars = kDefaultEchographicThreshold;
  int stall_radius = 1;
};

/// One row per grid value, sorted by value. The flagged count is taken over
/// the out-of-domain corpus when it is non-empty and over the in-domain
/// corpus otherwise. WER columns are corpus-level percentages over labeled
/// utterances and are empty when a corpus has none.
std::vector<SweepRow> run_sweep(const SweepSetup& setup, SweepAxis axis, std::vector<double> grid);

void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepRow>& rows);

/// JSON line per utterance: utterance_id, lambda, n_hat.
void write_predictions_jsonl(const std::filesystem::path& path, const std::vector<std::string>& ids,
                             const std::vector<LengthPrediction>& predictions);

}  // namespace echograph
