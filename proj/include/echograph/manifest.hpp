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

#include "echograph/corpus.hpp"

namespace echograph {

// JSON-lines manifest. Line 1 is a header record; each following line holds
// utterance_id, feature_path (relative to the manifest's directory),
// duration_seconds, frame_period_ms, reference_text and reference_tokens.
//
// Feature files are written next to the manifest in "<stem>.feats/".

void write_manifest(const std::filesystem::path& path, const Corpus& corpus);

/// Throws ParseError naming the line number for malformed records, and naming
/// the utterance id when a feature file is missing or truncated.
Corpus read_manifest(const std::filesystem::path& path);

}  // namespace echograph
