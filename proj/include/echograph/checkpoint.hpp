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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "echograph/lenpred.hpp"
#include "echograph/lm.hpp"
#include "echograph/nn.hpp"
#include "echograph/seq2seq.hpp"

namespace echograph {

// Checkpoint layout (all integers uint32 little-endian, reals float32):
//   "ECHOCKPT" | version | kind (length-prefixed string)
//   | n config entries, each: key (length-prefixed), value (int32 as uint32)
//   | n tensors, each: name (length-prefixed), rows, cols, rows*cols reals
//     in row-major order
// Tensors appear in declaration order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;  // "seq2seq", "lm" or "lenpred"
  std::map<std::string, std::int64_t> config;
  nn::ParamSet params;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws IoError when missing, ParseError when malformed or of another version.
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const Seq2SeqModel& model);
Seq2SeqModel load_model(const std::filesystem::path& path);
void save_lm(const std::filesystem::path& path, const RnnLm& lm);
RnnLm load_lm(const std::filesystem::path& path);
void save_length_predictor(const std::filesystem::path& path, const LengthPredictor& model);
LengthPredictor load_length_predictor(const std::filesystem::path& path);

}  // namespace echograph
