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

#include "echograph/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "echograph/binary_io.hpp"
#include "echograph/error.hpp"

namespace echograph {

namespace {
constexpr char kFeatureMagic[8] = {'E', 'C', 'H', 'O', 'F', 'E', 'A', 'T'};
}

void FeatureSequence::validate() const {
  if (frames.rows() < 1 || frames.cols() < 1) {
    throw InputError("feature sequence '" + utterance_id + "' is empty");
  }
  if (!(frame_period_ms > 0.0) || !std::isfinite(frame_period_ms)) {
    throw InputError("feature sequence '" + utterance_id + "' has nonpositive frame period");
  }
  if (!frames.allFinite()) {
    throw InputError("feature sequence '" + utterance_id + "' has non-finite entries");
  }
}

bool FeatureSequence::operator==(const FeatureSequence& other) const {
  return utterance_id == other.utterance_id && frame_period_ms == other.frame_period_ms &&
         frames.rows() == other.frames.rows() && frames.cols() == other.frames.cols() &&
         frames == other.frames;
}

FeatureSequence stack_frames(const FeatureSequence& features, int stack) {
  if (stack < 1) throw ConfigError("frame stack must be >= 1, got " + std::to_string(stack));
  const Eigen::Index t = features.num_frames();
  const Eigen::Index d = features.dim();
  const Eigen::Index t_out = (t + stack - 1) / stack;
  FeatureSequence out;
  out.utterance_id = features.utterance_id;
  out.frame_period_ms = features.frame_period_ms * stack;
  out.frames = Eigen::MatrixXd::Zero(t_out, d * stack);
  for (Eigen::Index i = 0; i < t; ++i) {
    out.frames.block(i / stack, (i % stack) * d, 1, d) = features.frames.row(i);
  }
  return out;
}

void write_feature_file(const std::filesystem::path& path, const FeatureSequence& features) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  binary::put_u32(out, static_cast<std::uint32_t>(features.num_frames()));
  binary::put_u32(out, static_cast<std::uint32_t>(features.dim()));
  for (Eigen::Index i = 0; i < features.num_frames(); ++i) {
    for (Eigen::Index j = 0; j < features.dim(); ++j) {
      binary::put_f32(out, static_cast<float>(features.frames(i, j)));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureSequence read_feature_file(const std::filesystem::path& path,
                                  const std::string& utterance_id, double frame_period_ms) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string() + " for utterance '" +
                         utterance_id + "'");
  char magic[sizeof(kFeatureMagic)];
  std::uint32_t t = 0;
  std::uint32_t d = 0;
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0) {
    throw ParseError("bad feature header for utterance '" + utterance_id + "'");
  }
  if (!binary::get_u32(in, t) || !binary::get_u32(in, d)) {
    throw ParseError("truncated feature header for utterance '" + utterance_id + "'");
  }
  FeatureSequence out;
  out.utterance_id = utterance_id;
  out.frame_period_ms = frame_period_ms;
  out.frames.resize(t, d);
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      float v = 0.0f;
      if (!binary::get_f32(in, v)) {
        throw ParseError("truncated feature file for utterance '" + utterance_id + "' (" +
                         path.string() + ")");
      }
      out.frames(i, j) = v;
    }
  }
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureSequence& features) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(9);
  for (Eigen::Index i = 0; i < features.num_frames(); ++i) {
    for (Eigen::Index j = 0; j < features.dim(); ++j) {
      if (j) out << ',';
      out << features.frames(i, j);
    }
    out << '\n';
  }
}

}  // namespace echograph
