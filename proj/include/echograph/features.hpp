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

#include <Eigen/Dense>
#include <filesystem>
#include <string>

namespace echograph {

/// A T x d matrix of acoustic-like frames. Rows are frames.
///
/// Entries are kept at float32 precision (the generator rounds them) so that
/// the on-disk format round-trips bit-exactly.
struct FeatureSequence {
  Eigen::MatrixXd frames;
  double frame_period_ms = 10.0;
  std::string utterance_id;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
  double duration_seconds() const {
    return static_cast<double>(frames.rows()) * frame_period_ms / 1000.0;
  }

  /// Throws InputError unless T >= 1, d >= 1, period > 0 and all entries finite.
  void validate() const;

  bool operator==(const FeatureSequence& other) const;
};

/// Concatenates `stack` consecutive frames into one. The final group is
/// zero-padded, so T' = ceil(T / stack) and the frame period scales by `stack`.
FeatureSequence stack_frames(const FeatureSequence& features, int stack);

// Binary feature files: 16-byte header ("ECHOFEAT", uint32 T, uint32 d, all
// little-endian) followed by T*d float32 values in row-major order.
void write_feature_file(const std::filesystem::path& path, const FeatureSequence& features);

/// Reads the matrix part of a feature file. frame_period_ms and utterance_id
/// are not stored in the file and are left at the supplied values.
FeatureSequence read_feature_file(const std::filesystem::path& path,
                                  const std::string& utterance_id, double frame_period_ms);

/// Writes one frame per line as comma-separated values, for inspection.
void write_feature_csv(const std::filesystem::path& path, const FeatureSequence& features);

}  // namespace echograph
