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

#include "echograph/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "echograph/error.hpp"

namespace echograph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kManifestFormat = "echograph-manifest";
constexpr int kManifestVersion = 1;
}  // namespace

void write_manifest(const fs::path& path, const Corpus& corpus) {
  const fs::path dir = path.parent_path();
  const std::string feat_dir_name = path.stem().string() + ".feats";
  if (!dir.empty()) fs::create_directories(dir);
  if (!corpus.empty()) fs::create_directories(dir / feat_dir_name);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest " + path.string() + " for writing");
  out << json{{"format", kManifestFormat}, {"version", kManifestVersion}}.dump() << '\n';
  for (const Utterance& utt : corpus) {
    const std::string rel = feat_dir_name + "/" + utt.features.utterance_id + ".feat";
    write_feature_file(dir / rel, utt.features);
    json rec = {{"utterance_id", utt.features.utterance_id},
                {"feature_path", rel},
                {"duration_seconds", utt.features.duration_seconds()},
                {"frame_period_ms", utt.features.frame_period_ms},
                {"reference_text", utt.reference_text},
                {"reference_tokens", utt.reference_tokens}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

Corpus read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest not found: " + path.string());
  const fs::path dir = path.parent_path();
  Corpus corpus;
  std::string line;
  long line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!saw_header) {
      if (!rec.is_object() || rec.value("format", "") != kManifestFormat) {
        throw ParseError(where + ": missing manifest header");
      }
      if (rec.value("version", 0) != kManifestVersion) {
        throw ParseError(where + ": unsupported manifest version");
      }
      saw_header = true;
      continue;
    }
    Utterance utt;
    std::string feature_path;
    double frame_period_ms = 0.0;
    try {
      utt.features.utterance_id = rec.at("utterance_id").get<std::string>();
      feature_path = rec.at("feature_path").get<std::string>();
      frame_period_ms = rec.at("frame_period_ms").get<double>();
      utt.reference_text = rec.at("reference_text").get<std::string>();
      utt.reference_tokens = rec.at("reference_tokens").get<std::vector<TokenId>>();
      (void)rec.at("duration_seconds").get<double>();
    } catch (const json::exception& e) {
      throw ParseError(where + ": bad record (" + e.what() + ")");
    }
    if (!(frame_period_ms > 0.0)) throw ParseError(where + ": nonpositive frame_period_ms");
    const std::string& id = utt.features.utterance_id;
    try {
      utt.features = read_feature_file(dir / feature_path, id, frame_period_ms);
    } catch (const IoError& e) {
      throw ParseError(where + ": utterance '" + id + "': " + e.what());
    }
    corpus.push_back(std::move(utt));
  }
  if (!saw_header) throw ParseError(path.string() + ": empty manifest (no header)");
  return corpus;
}

}  // namespace echograph
