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

#include "echograph/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "echograph/binary_io.hpp"
#include "echograph/error.hpp"

namespace echograph {

namespace {

constexpr char kMagic[8] = {'E', 'C', 'H', 'O', 'C', 'K', 'P', 'T'};

void put_string(std::ostream& out, const std::string& s) {
  binary::put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::uint32_t u32() {
    std::uint32_t v = 0;
    if (!binary::get_u32(in_, v)) fail();
    return v;
  }
  float f32() {
    float v = 0.0f;
    if (!binary::get_f32(in_, v)) fail();
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw ParseError(path_ + ": implausible string length");
    std::string s(n, '\0');
    if (!in_.read(s.data(), n)) fail();
    return s;
  }

 private:
  [[noreturn]] void fail() { throw ParseError(path_ + ": truncated checkpoint"); }
  std::istream& in_;
  std::string path_;
};

Checkpoint expect_kind(const std::filesystem::path& path, const std::string& kind) {
  Checkpoint c = read_checkpoint(path);
  if (c.kind != kind) {
    throw ParseError(path.string() + ": expected a '" + kind + "' checkpoint, found '" + c.kind + "'");
  }
  return c;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  binary::put_u32(out, kCheckpointVersion);
  put_string(out, checkpoint.kind);
  binary::put_u32(out, static_cast<std::uint32_t>(checkpoint.config.size()));
  for (const auto& [key, value] : checkpoint.config) {
    put_string(out, key);
    binary::put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(value)));
  }
  const nn::ParamSet& params = checkpoint.params;
  binary::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Eigen::MatrixXd& m = params.var(i)->value;
    put_string(out, params.name(i));
    binary::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    binary::put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) binary::put_f32(out, static_cast<float>(m(r, c)));
    }
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint not found: " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw ParseError(path.string() + ": not a checkpoint file");
  }
  Reader r(in, path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.kind = r.str();
  const std::uint32_t n_config = r.u32();
  for (std::uint32_t i = 0; i < n_config; ++i) {
    std::string key = r.str();
    c.config[key] = static_cast<std::int32_t>(r.u32());
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28)) {
      throw ParseError(path.string() + ": implausible tensor size for " + name);
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t a = 0; a < rows; ++a) {
      for (std::uint32_t b = 0; b < cols; ++b) m(a, b) = r.f32();
    }
    c.params.add(name, std::move(m));
  }
  return c;
}

void save_model(const std::filesystem::path& path, const Seq2SeqModel& model) {
  write_checkpoint(path, {"seq2seq", model.config().to_map(), model.params()});
}

Seq2SeqModel load_model(const std::filesystem::path& path) {
  Checkpoint c = expect_kind(path, "seq2seq");
  return Seq2SeqModel(Seq2SeqConfig::from_map(c.config), std::move(c.params));
}

void save_lm(const std::filesystem::path& path, const RnnLm& lm) {
  write_checkpoint(path, {"lm", lm.config().to_map(), lm.params()});
}

RnnLm load_lm(const std::filesystem::path& path) {
  Checkpoint c = expect_kind(path, "lm");
  return RnnLm(RnnLmConfig::from_map(c.config), std::move(c.params));
}

void save_length_predictor(const std::filesystem::path& path, const LengthPredictor& model) {
  write_checkpoint(path, {"lenpred", model.config().to_map(), model.params()});
}

LengthPredictor load_length_predictor(const std::filesystem::path& path) {
  Checkpoint c = expect_kind(path, "lenpred");
  return LengthPredictor(LengthPredictorConfig::from_map(c.config), std::move(c.params));
}

}  // namespace echograph
